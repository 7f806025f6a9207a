from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from aenum import IntEnum
from loguru import logger

from ..errors import SpecError, ValidationError
from ..points import TFPointSet
from .audio import AudioBuffer
from .cqt import CqtConfig, cqt_to_points
from .sinusoidal import peak_window_gain, sinusoidal_model_points
from .stft import stft, stft_to_points, window_gain


class TransformKind(IntEnum):
    _init_ = "value display"

    STFT = 1, "stft:N,hop"
    CQT = 2, "cqt:fmin,fmax,bpo[,q]"
    SIN = 3, "sin:N,hop,thresh_db"


_ITEM = re.compile(r"^(?P<kind>[a-z]+):(?P<params>[^@]+?)(?:@(?P<start>[^-]+)-(?P<end>.+))?$")


@dataclass(frozen=True)
class TransformSpec:
    kind: TransformKind
    params: Tuple[float, ...]
    segment: Optional[Tuple[float, float]] = None

    def apply(self, audio: AudioBuffer, center: bool = False) -> TFPointSet:
        if self.kind == TransformKind.STFT:
            n, hop = (int(p) for p in self.params)
            return stft_to_points(stft(audio, n, hop, center=center))
        elif self.kind == TransformKind.SIN:
            n, hop, thresh = self.params
            return sinusoidal_model_points(audio, int(n), int(hop), thresh, center=center)
        else:
            return cqt_to_points(audio, CqtConfig(*self.params[:2], int(self.params[2]), *self.params[3:]))

    @property
    def gain(self) -> float:
        """Magnitude of a unit-amplitude complex exponential in this transform."""
        if self.kind == TransformKind.CQT:
            return 1.0
        elif self.kind == TransformKind.SIN:
            return peak_window_gain(int(self.params[0]))
        return window_gain(int(self.params[0]))


def _parse_item(item: str, text: str) -> TransformSpec:
    match = _ITEM.match(item.strip())
    if not match:
        raise SpecError(text, f'can not parse "{item}"')
    name = match["kind"]
    try:
        kind = TransformKind[name.upper()]
    except KeyError:
        choices = ", ".join(k.display for k in TransformKind)
        raise SpecError(text, f'unknown transform "{name}", expected one of {choices}') from None
    try:
        params = tuple(float(p) for p in match["params"].split(","))
    except ValueError:
        raise SpecError(text, f'malformed parameters "{match["params"]}"') from None
    expected = {TransformKind.STFT: (2,), TransformKind.CQT: (3, 4), TransformKind.SIN: (3,)}[kind]
    if len(params) not in expected:
        raise SpecError(text, f'"{name}" takes parameters {kind.display}')
    segment = None
    if match["start"] is not None:
        try:
            segment = (float(match["start"]), float(match["end"]))
        except ValueError:
            raise SpecError(text, f'malformed segment in "{item}"') from None
        if not segment[1] > segment[0] >= 0:
            raise SpecError(text, f"segment {segment} must be increasing and non-negative")
    return TransformSpec(kind, params, segment)


def parse_transform_spec(text: str) -> List[TransformSpec]:
    """
    Parse a single transform ("stft:256,64") or a hybrid of time segments
    ("stft:256,64@0-0.5;cqt:55,7040,12@0.5-1.0"). Hybrid segments must be ordered
    in time and must not overlap.
    """
    items = [i for i in text.split(";") if i.strip()]
    if not items:
        raise SpecError(text, "empty spec")
    specs = [_parse_item(i, text) for i in items]
    if len(specs) > 1:
        if any(s.segment is None for s in specs):
            raise SpecError(text, "every item of a hybrid spec needs a time segment")
        for prev, cur in zip(specs, specs[1:]):
            if cur.segment[0] < prev.segment[1]:
                raise SpecError(text, f"segments {prev.segment} and {cur.segment} overlap or are out of order")
    return specs


def apply_transform_spec(audio: AudioBuffer, text: str) -> TFPointSet:
    """
    Run the transforms of a spec. Segmented items keep only points with t in
    [start, end) and are scaled by 1/gain so that the pieces of a hybrid share
    one magnitude unit.
    """
    specs = parse_transform_spec(text)
    if len(specs) == 1 and specs[0].segment is None:
        return specs[0].apply(audio)
    pieces = []
    for s in specs:
        try:
            points = s.apply(audio, center=True)
        except ValidationError as e:
            raise SpecError(text, str(e)) from None
        start, end = s.segment
        points = points.select((points.t >= start) & (points.t < end))
        tag = f"{points.source_tag}@{start}-{end}"
        logger.debug(f"Segment {tag}: {len(points)} points.")
        pieces.append(TFPointSet(points.t, points.f, points.m / s.gain, tag))
    return TFPointSet.concat(pieces)
