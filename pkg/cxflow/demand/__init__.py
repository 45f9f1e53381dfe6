from cxflow.demand.models import *
from cxflow.demand.arrivals import *
from cxflow.demand.geh import *
