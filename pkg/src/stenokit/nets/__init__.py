from .network import NetConfig, ToyNet
from .optim import Adam, MomentumSGD, ReduceLROnPlateau
from .training import (
    TrainSchedule,
    classifier_schedule,
    detector_schedule,
    softmax_cross_entropy,
    train_classifier,
    train_detector,
)
from .gradcam import CamMap, grad_cam
from .checkpoint import load_net, save_net

__all__ = [
    "NetConfig",
    "ToyNet",
    "Adam",
    "MomentumSGD",
    "ReduceLROnPlateau",
    "TrainSchedule",
    "classifier_schedule",
    "detector_schedule",
    "softmax_cross_entropy",
    "train_classifier",
    "train_detector",
    "CamMap",
    "grad_cam",
    "load_net",
    "save_net",
]
