"""
Configuration module - loads all simulator defaults from environment variables
"""
import os
import logging
from dotenv import load_dotenv

# Load .env file if exists
load_dotenv()

logger = logging.getLogger(__name__)


def _int_list(raw: str):
    return [int(x) for x in raw.split(',') if x.strip()]


# Device / radio
SWITCH_DELAY_MS = float(os.getenv('SWITCH_DELAY_MS', '5'))  # Rx/Tx retune between networks

# Link delays (ms) per signaling segment
AS_DELAY_MS = float(os.getenv('AS_DELAY_MS', '2'))
NAS_DELAY_MS = float(os.getenv('NAS_DELAY_MS', '10'))
INTER_PLMN_DELAY_MS = float(os.getenv('INTER_PLMN_DELAY_MS', '30'))

# Paging
DRX_CYCLE = int(os.getenv('DRX_CYCLE', '32'))  # frames per paging cycle
OCCASIONS_PER_FRAME = int(os.getenv('OCCASIONS_PER_FRAME', '4'))
FRAME_DURATION_MS = int(os.getenv('FRAME_DURATION_MS', '10'))
MAX_PAGING_ATTEMPTS = int(os.getenv('MAX_PAGING_ATTEMPTS', '3'))  # per escalation level
PAGE_RETRY_INTERVAL_MS = int(os.getenv('PAGE_RETRY_INTERVAL_MS', '1280'))
RAN_FAILURE_FALLBACK_TO_CN = bool(int(os.getenv('RAN_FAILURE_FALLBACK_TO_CN', '1')))

# RRC lifecycle
INACTIVE_TO_IDLE_S = float(os.getenv('INACTIVE_TO_IDLE_S', '60'))
RLF_TIMEOUT_MS = float(os.getenv('RLF_TIMEOUT_MS', '1000'))

# Strategy parameters
PUSH_DELAY_MS = float(os.getenv('PUSH_DELAY_MS', '200'))
SMS_DELAY_MIN_MS = float(os.getenv('SMS_DELAY_MIN_MS', '500'))
SMS_DELAY_MEAN_MS = float(os.getenv('SMS_DELAY_MEAN_MS', '2000'))
HOLD_INTERVAL_MS = float(os.getenv('HOLD_INTERVAL_MS', '5000'))
INACTIVE_THRESHOLD_MS = float(os.getenv('INACTIVE_THRESHOLD_MS', '1000'))
BUSY_WHILE_INACTIVE = bool(int(os.getenv('BUSY_WHILE_INACTIVE', '0')))
GUTI_FIT_ATTEMPTS = int(os.getenv('GUTI_FIT_ATTEMPTS', '8'))
GAP_GRANT_PROBABILITY = float(os.getenv('GAP_GRANT_PROBABILITY', '1.0'))

# Run orchestration
OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'results')
WORKERS = int(os.getenv('WORKERS', '1'))
RESULTS_DB = os.getenv('RESULTS_DB', '')  # empty = run history disabled

# Logging
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE', 'multisim_sim.log')

# RAN-based vs CN-based comparison
COMPARE_RAN_STACK = _int_list(os.getenv('COMPARE_RAN_STACK', '13,7,2'))
COMPARE_CN_STACK = _int_list(os.getenv('COMPARE_CN_STACK', '11,8'))
COMPARE_NOTIFY_STACKS = [_int_list(s) for s in os.getenv('COMPARE_NOTIFY_STACKS', '8;9;10').split(';') if s.strip()]
COMPARE_SWEEP_DEVICES = _int_list(os.getenv('COMPARE_SWEEP_DEVICES', '20,40,80'))


# Validation
def validate_config():
    """Validate critical configuration values"""
    errors = []

    if SWITCH_DELAY_MS < 0:
        errors.append("SWITCH_DELAY_MS must be >= 0")

    for name, value in (('AS_DELAY_MS', AS_DELAY_MS), ('NAS_DELAY_MS', NAS_DELAY_MS),
                        ('INTER_PLMN_DELAY_MS', INTER_PLMN_DELAY_MS)):
        if value < 0:
            errors.append(f"{name} must be >= 0")

    if DRX_CYCLE < 1 or DRX_CYCLE & (DRX_CYCLE - 1):
        errors.append("DRX_CYCLE must be a power of two")

    if OCCASIONS_PER_FRAME not in (1, 2, 4):
        errors.append("OCCASIONS_PER_FRAME must be 1, 2 or 4")

    if MAX_PAGING_ATTEMPTS < 1:
        errors.append("MAX_PAGING_ATTEMPTS must be >= 1")

    if not 0.0 <= GAP_GRANT_PROBABILITY <= 1.0:
        errors.append("GAP_GRANT_PROBABILITY must be within [0, 1]")

    if SMS_DELAY_MEAN_MS < SMS_DELAY_MIN_MS:
        errors.append("SMS_DELAY_MEAN_MS must be >= SMS_DELAY_MIN_MS")

    if WORKERS < 1:
        errors.append("WORKERS must be >= 1")

    stacks = [COMPARE_RAN_STACK, COMPARE_CN_STACK, *COMPARE_NOTIFY_STACKS]
    if any(sid < 1 or sid > 14 for stack in stacks for sid in stack):
        errors.append("COMPARE_* stacks may only name strategy ids 1-14")

    if errors:
        raise ValueError(f"Configuration errors:\n" + "\n".join(f"- {e}" for e in errors))


# Validate on import
if __name__ != "__main__":
    try:
        validate_config()
    except ValueError as e:
        logger.warning(f"{e}\nPlease check your .env file")
