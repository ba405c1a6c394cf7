"""CASCRNet: shared-channel residual blocks and atrous spatial pyramid pooling
for ten-class capsule endoscopy frame classification, on a small numpy engine."""

CLASS_NAMES = (
    "Angioectasia",
    "Bleeding",
    "Erosion",
    "Erythema",
    "Foreign Body",
    "Lymphangiectasia",
    "Normal",
    "Polyp",
    "Ulcer",
    "Worms",
)
NUM_CLASSES = len(CLASS_NAMES)

__version__ = "0.1.0"
