from cxflow.sim.models import *
from cxflow.sim.geometry import *
from cxflow.sim.idm import *
from cxflow.sim.world import *
