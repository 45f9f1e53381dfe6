from cxflow.common.models import *
from cxflow.common.enums import *
from cxflow.common.constants import *
from cxflow.common.exceptions import *
from cxflow.common.types import *
from cxflow.common.utils import *
from cxflow.common.streams import *
from cxflow.common.rng import *
