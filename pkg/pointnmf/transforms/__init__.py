from .audio import AudioBuffer, read_wav, write_wav, mix_at_0db, split_train_holdout
from .stft import StftGrid, stft, istft, stft_to_points, hann_window, window_gain
from .cqt import CqtConfig, cqt_to_points
from .sinusoidal import sinusoidal_model_points
from .spec import TransformKind, TransformSpec, parse_transform_spec, apply_transform_spec
