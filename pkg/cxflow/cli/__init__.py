from cxflow.cli.config import *
from cxflow.cli.runner import *
