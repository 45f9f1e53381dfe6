from cxflow.metrics.runlog import *
from cxflow.metrics.evaluation import *
from cxflow.metrics.report import *
