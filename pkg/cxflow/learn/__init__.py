from cxflow.learn.models import *
from cxflow.learn.reward import *
from cxflow.learn.network import *
from cxflow.learn.loss import *
from cxflow.learn.replay import *
from cxflow.learn.checkpoint import *
from cxflow.learn.trainer import *
