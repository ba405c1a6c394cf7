from __future__ import annotations

from dataclasses import dataclass, field, replace

from .. import NUM_CLASSES
from ..errors import InvalidSpecError

SUPPORTED_INPUT_SIZES = (32, 64, 224)


@dataclass(frozen=True)
class SCRConfig:
    """Shared Channel Residual block: concat -> 2x2 maxpool -> dilated 3x3 conv -> LeakyReLU."""

    out_channels: int
    dilation: int = 2
    alpha: float = 0.01
    pool_window: int = 2
    conv_kernel: int = 3

    def __post_init__(self):
        if self.out_channels < 1:
            raise InvalidSpecError(f"SCR out_channels must be positive, got {self.out_channels}")
        if self.dilation < 1:
            raise InvalidSpecError(f"SCR dilation must be >= 1, got {self.dilation}")
        if (self.pool_window, self.conv_kernel) != (2, 3):
            raise InvalidSpecError("SCR blocks use a fixed 2x2 pool and 3x3 conv")


@dataclass(frozen=True)
class ASPPConfig:
    branch_channels: int = 16
    dilation_rates: tuple[int, ...] = (2, 4, 8)
    include_image_pool: bool = True
    project_channels: int = 32
    alpha: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "dilation_rates", tuple(int(r) for r in self.dilation_rates))
        if not self.dilation_rates:
            raise InvalidSpecError("ASPP needs at least one dilation rate")
        if any(r < 1 for r in self.dilation_rates):
            raise InvalidSpecError(f"ASPP dilation rates must be positive, got {self.dilation_rates}")
        if any(b < a for a, b in zip(self.dilation_rates, self.dilation_rates[1:])):
            raise InvalidSpecError(f"ASPP dilation rates must be non-decreasing, got {self.dilation_rates}")
        if self.branch_channels < 1 or self.project_channels < 1:
            raise InvalidSpecError("ASPP channel counts must be positive")

    @property
    def n_branches(self) -> int:
        return len(self.dilation_rates) + 1 + int(self.include_image_pool)

    @property
    def concat_channels(self) -> int:
        return self.n_branches * self.branch_channels

    def check_rates(self, h: int, w: int) -> None:
        """Reject rates whose taps reach more than twice the feature extent.

        Between one and two extents only the centre tap can see real data;
        that is allowed so that the usual {6, 12, 18} rates run on 14x14 maps.
        """
        limit = 2 * min(h, w)
        for r in self.dilation_rates:
            if r > limit:
                raise InvalidSpecError(
                    f"ASPP dilation rate {r} is too large for a {h}x{w} input (max {limit})"
                )


@dataclass(frozen=True)
class ModelConfig:
    input_size: int = 32
    stem_channels: int = 8
    stage_channels: tuple[int, ...] = (16, 32)
    scr_dilation: int = 2
    aspp: ASPPConfig = field(default_factory=ASPPConfig)
    num_classes: int = NUM_CLASSES
    alpha: float = 0.01
    seed: int = 0
    in_channels: int = 3
    # "dense" is a single affine layer, used for toy parameter counts
    architecture: str = "cascrnet"
    dense_features: int = 4

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(int(c) for c in self.stage_channels))
        self.validate()

    def validate(self) -> None:
        if self.architecture == "dense":
            if self.dense_features < 1 or self.num_classes < 1:
                raise InvalidSpecError("dense model needs positive feature and class counts")
            return
        if self.architecture != "cascrnet":
            raise InvalidSpecError(f"unknown architecture {self.architecture!r}")
        if self.num_classes != NUM_CLASSES:
            raise InvalidSpecError(f"num_classes must be {NUM_CLASSES}, got {self.num_classes}")
        if self.in_channels != 3:
            raise InvalidSpecError("CASCRNet takes 3-channel RGB input")
        if self.input_size not in SUPPORTED_INPUT_SIZES:
            raise InvalidSpecError(
                f"input_size must be one of {SUPPORTED_INPUT_SIZES}, got {self.input_size}"
            )
        if not self.stage_channels:
            raise InvalidSpecError("at least one SCR stage is required")
        if self.stem_channels < 1 or min(self.stage_channels) < 1:
            raise InvalidSpecError("channel counts must be positive")
        if self.scr_dilation < 1:
            raise InvalidSpecError(f"scr_dilation must be >= 1, got {self.scr_dilation}")
        if self.input_size % (2 ** len(self.stage_channels)):
            raise InvalidSpecError(
                f"input_size {self.input_size} is not divisible by 2^{len(self.stage_channels)}"
            )
        self.aspp.check_rates(self.aspp_input_size, self.aspp_input_size)

    @property
    def aspp_input_size(self) -> int:
        return self.input_size // 2 ** len(self.stage_channels)

    def with_rates(self, aspp_rates, scr_dilation: int | None = None) -> "ModelConfig":
        aspp = replace(self.aspp, dilation_rates=tuple(aspp_rates))
        return replace(self, aspp=aspp, scr_dilation=self.scr_dilation if scr_dilation is None else scr_dilation)


DESK = ModelConfig()

# Reconstruction for 224x224 inputs; layer widths are not published.
PAPER_SCALE = ModelConfig(
    input_size=224,
    stem_channels=16,
    stage_channels=(32, 64, 128, 256),
    scr_dilation=2,
    aspp=ASPPConfig(branch_channels=64, dilation_rates=(6, 12, 18), project_channels=128),
)
