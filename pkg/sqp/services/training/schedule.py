import math

from pydantic import BaseModel


class EpochDecision(BaseModel):
    improved: bool
    lr_decayed: bool
    stop: bool


class PlateauSchedule:
    """
    Multiplies the learning rate by `factor` after `patience` epochs without a
    new best validation loss and stops after `early_stop_patience` such epochs.
    Any strict improvement resets both counters.
    """

    def __init__(self, lr: float, patience: int, factor: float, early_stop_patience: int):
        self.lr = lr
        self._patience = patience
        self._factor = factor
        self._early_stop_patience = early_stop_patience
        self.best = math.inf
        self._plateau_epochs = 0
        self._stagnant_epochs = 0

    def step(self, val_loss: float) -> EpochDecision:
        if val_loss < self.best:
            self.best = val_loss
            self._plateau_epochs = 0
            self._stagnant_epochs = 0
            return EpochDecision(improved=True, lr_decayed=False, stop=False)

        self._plateau_epochs += 1
        self._stagnant_epochs += 1
        decayed = False
        if self._plateau_epochs >= self._patience:
            self.lr *= self._factor
            self._plateau_epochs = 0
            decayed = True
        return EpochDecision(
            improved=False,
            lr_decayed=decayed,
            stop=self._stagnant_epochs >= self._early_stop_patience,
        )
