DT = 1.0  # seconds per physics and decision step

# car following
DEFAULT_DESIRED_SPEED = 13.89  # 50 km/h
DEFAULT_TIME_HEADWAY = 1.0
DEFAULT_DELTA = 4.0
DEFAULT_STANDSTILL_GAP = 1.0
DEFAULT_MAX_ACCEL = 2.6
DEFAULT_COMFORT_DECEL = 4.5
DEFAULT_EMERGENCY_DECEL = 9.0
DEFAULT_VEHICLE_LENGTH = 4.0

V_LEN = 5.0  # queue footprint of one stopped vehicle, length plus standstill gap
STILL_SPEED = 0.1  # below this a vehicle counts as still
ENTRANCE_TOLERANCE = 0.5
STOP_LINE_MARGIN = 0.01

# geometry
DEFAULT_CONTROL_ZONE_RADIUS = 30.0
DEFAULT_APPROACH_LENGTH = 150.0
DEFAULT_EXIT_LENGTH = 60.0
DEFAULT_LANE_WIDTH = 3.5
MIN_BOX_SIDE = 24.0
MIN_INNER_PATH_LENGTH = 10.0
CONFLICT_CLEARANCE = 2.0  # paths closer than this share a conflict zone
PATH_SAMPLE_SPACING = 0.25
OCCUPANCY_SEGMENTS = 10

# observation and reward scaling
W_MAX = 200.0
QUEUE_SLOTS_PER_LANE = 6  # floor(control zone radius / V_LEN) at the default radius

# signal plan
DEFAULT_GREEN = 30.0
DEFAULT_YELLOW = 3.0
DEFAULT_ALL_RED = 2.0

# congestion
CONGESTION_SPEED = 1.0
CONGESTION_STEPS = 60
DEFAULT_CL_THRESHOLD = 46.5
DEFAULT_SLOPE_WINDOW = 500
GEH_PASS = 5.0

# v2v
DEFAULT_LONG_RANGE_RADIUS = 150.0
DEFAULT_HOP_RANGE = 50.0
DEFAULT_MAX_HOPS = 3

# learning
DEFAULT_GAMMA = 0.99
DEFAULT_LR = 0.0005
DEFAULT_MOMENTUM = 0.9
DEFAULT_BATCH = 32
DEFAULT_BUFFER_CAPACITY = 50000
DEFAULT_PRIORITY_ALPHA = 0.5
DEFAULT_IS_BETA = 0.4
DEFAULT_TARGET_SYNC = 500
DEFAULT_WARMUP = 1000
DEFAULT_EPSILON_START = 1.0
DEFAULT_EPSILON_END = 0.05
DEFAULT_EPSILON_DECAY = 50000  # decisions
DEFAULT_HIDDEN = (512, 512, 512)
PRIORITY_EPS = 1e-6

CHECKPOINT_MAGIC = b"CXFLOW1"
