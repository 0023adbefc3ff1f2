from .check import CheckResult, Detection, check1, check2
from .core import Protocol, SendOutcome, SendRecord
from .messages import EdgeFact, Probe, RandomIndexArray, Transcript
from .params import ProtocolParams
from .sendpath import PathRun, naive_send, send_path
from .update import UpdateResult, find_conflicts, update

__all__ = [
    "CheckResult", "Detection", "EdgeFact", "PathRun", "Probe", "Protocol", "ProtocolParams",
    "RandomIndexArray", "SendOutcome", "SendRecord", "Transcript", "UpdateResult",
    "check1", "check2", "find_conflicts", "naive_send", "send_path", "update",
]
