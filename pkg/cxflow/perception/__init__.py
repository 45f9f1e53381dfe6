from cxflow.perception.models import *
from cxflow.perception.observation import *
