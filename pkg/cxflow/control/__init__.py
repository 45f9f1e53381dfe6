from cxflow.control.models import *
from cxflow.control.rules import *
from cxflow.control.controllers import *
from cxflow.control.events import *
from cxflow.control.env import *
