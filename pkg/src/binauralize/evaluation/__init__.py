from .infer import binauralize_clip
from .report import EvalReport, evaluate
from .probes import export_features, predict_rir, rt60_probe

__all__ = ["binauralize_clip", "evaluate", "EvalReport",
           "rt60_probe", "export_features", "predict_rir"]
