"""Training configuration."""

from __future__ import annotations

from dataclasses import dataclass, asdict, field


@dataclass
class TrainConfig:
    """Hyperparameters of one training run.

    Loss weights and the 15000-iteration default follow the reference
    setup; optimizer settings (Adam, lr 1e-4, betas 0.5/0.9) are
    conventional critic-friendly choices and stay configurable.
    """

    lambda_adv: float = 1.0
    lambda_rec: float = 50.0
    lambda_con: float = 5.0
    lambda_gp: float = 1.0
    iterations_per_level: int = 15000
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    scale_factor: float = 4.0 / 3.0
    n_levels: int = 7
    seed: int = 0
    critic_steps: int = 1
    use_contact_loss: bool = True
    conditional: bool = False
    constrained_joints: list = field(default_factory=list)  # joint names; "root" = position + orientation
    contact_eps_factor: float = 0.006
    leaky_slope: float = 0.2
    telemetry_every: int = 25

    def __post_init__(self):
        for name in ("lambda_adv", "lambda_rec", "lambda_con", "lambda_gp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.iterations_per_level < 0:
            raise ValueError("iterations_per_level must be nonnegative")
        if self.n_levels < 2:
            raise ValueError("need at least two levels")
        if self.critic_steps < 1:
            raise ValueError("critic_steps must be at least 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})
