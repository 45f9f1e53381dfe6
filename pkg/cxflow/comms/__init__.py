from cxflow.comms.models import *
from cxflow.comms.network import *
from cxflow.comms.errors import *
