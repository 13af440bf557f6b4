"""Intrinsic-motivation modules: fixed-target distillation and the three
self-supervised variants.

All four share one mechanism: a predictor network chases a target network,
and the per-state chase error is the intrinsic reward. They differ only in
what happens to the target: nothing (RND), contrastive distance matching on
augmented pairs (SND-V), spatio-temporal InfoNCE (SND-STD), or
variance/invariance/covariance regularization (SND-VIC).

Modules follow the scikit-learn estimator protocol: constructors only store
hyperparameters, networks are built lazily on first use, ``partial_fit``
performs one update, ``score_samples`` returns per-state novelty, and
``transform`` exposes target features for analysis.
"""

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import ContractError, NumericError
from ..nn import Adam, Conv2D, Dense, Elu, Network
from ..seeding import stream
from .augment import AugmentationConfig, augment_batch
from .losses import (
    distillation_errors,
    distillation_loss,
    sndv_loss,
    stdim_losses,
    vicreg_losses,
)

_CHUNK = 512


def _conv_stack(in_channels):
    return [
        Conv2D(in_channels, 8, 3, stride=2, padding=1),
        Elu(),
        Conv2D(8, 16, 3, stride=2, padding=1),
        Elu(),
        Conv2D(16, 16, 3, stride=2, padding=1),
        Elu(),
    ]


def _flat_features(in_shape):
    _, h, w = in_shape
    for _ in range(3):
        h = (h - 1) // 2 + 1
        w = (w - 1) // 2 + 1
    return 16 * h * w


class MotivationBase(BaseEstimator):
    """Shared distillation machinery; subclasses add target training."""

    variant = None
    target_gain = np.sqrt(2.0)

    def __init__(self, feature_dim=64, predictor_hidden=512, lr=1e-4, seed=0):
        self.feature_dim = feature_dim
        self.predictor_hidden = predictor_hidden
        self.lr = lr
        self.seed = seed

    # -- construction -------------------------------------------------------

    def _build(self, in_shape):
        flat = _flat_features(in_shape)
        self.in_shape_ = tuple(in_shape)
        self.target_net_ = Network(
            _conv_stack(in_shape[0]) + [Dense(flat, self.feature_dim)],
            in_shape,
            gain=self.target_gain,
            rng=stream(self.seed, "target_init"),
            local_layer=3,
        )
        self.predictor_net_ = Network(
            _conv_stack(in_shape[0])
            + [
                Dense(flat, self.predictor_hidden),
                Elu(),
                Dense(self.predictor_hidden, self.predictor_hidden),
                Elu(),
                Dense(self.predictor_hidden, self.feature_dim),
            ],
            in_shape,
            gain=np.sqrt(2.0),
            rng=stream(self.seed, "predictor_init"),
        )
        self.predictor_opt_ = Adam(self.predictor_net_.params, lr=self.lr)
        self._build_target_side()
        self._pre = getattr(self, "_pre", None)

    def _build_target_side(self):
        pass

    def set_preprocessor(self, fn):
        """Install the observation transform applied before every net input."""
        self._pre = fn

    def _prepared(self, states):
        states = np.asarray(states, dtype=np.float32)
        if states.ndim != 4:
            raise ContractError(f"states must be (N, C, H, W), got {states.shape}")
        if not hasattr(self, "target_net_"):
            self._build(states.shape[1:])
        elif states.shape[1:] != self.in_shape_:
            raise ContractError(
                f"state shape {states.shape[1:]} != module shape {self.in_shape_}"
            )
        pre = getattr(self, "_pre", None)
        return pre(states) if pre is not None else states

    # -- inference ----------------------------------------------------------

    def score_samples(self, states):
        """Per-state intrinsic reward (squared feature distance); read-only."""
        x = self._prepared(states)
        out = np.empty(x.shape[0], dtype=np.float64)
        for lo in range(0, x.shape[0], _CHUNK):
            chunk = x[lo : lo + _CHUNK]
            zt = self.target_net_.run(chunk).output
            zp = self.predictor_net_.run(chunk).output
            out[lo : lo + _CHUNK] = distillation_errors(zt, zp)
        return out

    def intrinsic_reward(self, state):
        """Novelty of one (C, H, W) state."""
        state = np.asarray(state, dtype=np.float32)
        if state.ndim != 3:
            raise ContractError(f"state must be (C, H, W), got {state.shape}")
        return float(self.score_samples(state[None])[0])

    def transform(self, states):
        """Target features for a batch of states, (N, D)."""
        x = self._prepared(states)
        return np.concatenate(
            [
                self.target_net_.run(x[lo : lo + _CHUNK]).output
                for lo in range(0, x.shape[0], _CHUNK)
            ]
        )

    # -- training -----------------------------------------------------------

    def predictor_update(self, states):
        """One Adam step on the predictor toward current target features."""
        if len(states) == 0:
            raise ContractError("predictor update needs a nonempty batch")
        x = self._prepared(states)
        zt = self.target_net_.run(x).output
        tape = self.predictor_net_.run(x)
        loss, dzp = distillation_loss(zt, tape.output)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite predictor loss {loss}")
        _, grads = tape.backward(dzp)
        self.predictor_opt_.step(grads)
        return loss

    def target_update(self, states, next_states):
        return {}

    def module_update(self, states, next_states=None):
        """Predictor step plus the variant's target step; returns all losses."""
        losses = {"predictor_loss": self.predictor_update(states)}
        losses.update(self.target_update(states, next_states))
        return losses

    def partial_fit(self, states, next_states=None):
        self.module_update(states, next_states)
        return self

    def fit(self, states, next_states=None):
        return self.partial_fit(states, next_states)

    # -- persistence --------------------------------------------------------

    def _opt_items(self, label, opt):
        items = []
        for name in opt.params:
            items.append((f"{label}.m.{name}", opt.m[name]))
            items.append((f"{label}.v.{name}", opt.v[name]))
        return items

    def state_items(self):
        """All mutable arrays as ordered (name, array) pairs."""
        items = [(f"target.{k}", v) for k, v in self.target_net_.param_items()]
        items += [(f"predictor.{k}", v) for k, v in self.predictor_net_.param_items()]
        items += self._opt_items("adam.predictor", self.predictor_opt_)
        return items

    def state_scalars(self):
        return {"predictor_t": self.predictor_opt_.t}

    def load_state(self, arrays, scalars, in_shape):
        if not hasattr(self, "target_net_"):
            self._build(tuple(in_shape))
        for name, arr in self.state_items():
            if name not in arrays:
                raise ContractError(f"missing state array {name}")
            if arrays[name].shape != arr.shape:
                raise ContractError(f"state array {name} has wrong shape")
            arr[...] = arrays[name]
        self.predictor_opt_.t = int(scalars["predictor_t"])


class RND(MotivationBase):
    """Distillation of a fixed randomly initialized target."""

    variant = "rnd"


class _TrainedTargetBase(MotivationBase):
    """Common Adam plumbing for modules whose target learns."""

    def __init__(
        self, feature_dim=64, predictor_hidden=512, lr=1e-4, seed=0, target_lr=1e-4
    ):
        super().__init__(
            feature_dim=feature_dim,
            predictor_hidden=predictor_hidden,
            lr=lr,
            seed=seed,
        )
        self.target_lr = target_lr

    def _aux_params(self):
        return {}

    def _build_target_side(self):
        self.aux_params_ = self._aux_params()
        trained = {f"target.{k}": v for k, v in self.target_net_.params.items()}
        trained.update({f"aux.{k}": v for k, v in self.aux_params_.items()})
        self.target_opt_ = (
            Adam(trained, lr=self.target_lr) if self.target_lr > 0 else None
        )

    def _target_step(self, grads):
        if self.target_opt_ is not None:
            self.target_opt_.step(grads)

    def state_items(self):
        items = super().state_items()
        items += [(f"aux.{k}", v) for k, v in sorted(self.aux_params_.items())]
        if self.target_opt_ is not None:
            items += self._opt_items("adam.target", self.target_opt_)
        return items

    def state_scalars(self):
        scalars = super().state_scalars()
        scalars["target_t"] = self.target_opt_.t if self.target_opt_ else 0
        return scalars

    def load_state(self, arrays, scalars, in_shape):
        super().load_state(arrays, scalars, in_shape)
        if self.target_opt_ is not None:
            self.target_opt_.t = int(scalars["target_t"])


class SNDV(_TrainedTargetBase):
    """Target trained to match binary distance targets on augmented pairs."""

    variant = "snd-v"

    def __init__(
        self,
        feature_dim=64,
        predictor_hidden=512,
        lr=1e-4,
        seed=0,
        target_lr=1e-4,
        hinge=False,
        unsquared=False,
        aug_scheme="noise_tiles",
    ):
        super().__init__(
            feature_dim=feature_dim,
            predictor_hidden=predictor_hidden,
            lr=lr,
            seed=seed,
            target_lr=target_lr,
        )
        self.hinge = hinge
        self.unsquared = unsquared
        self.aug_scheme = aug_scheme

    def _build_target_side(self):
        super()._build_target_side()
        self.aug_config_ = AugmentationConfig(scheme=self.aug_scheme)
        self._pair_rng = stream(self.seed, "target_batch", 1)

    def make_pair_batch(self, states):
        """Sample (s, s', tau) pairs and augment both members independently.

        With probability 0.5 the pair is the same state (tau = 0), else a
        distinct state drawn uniformly from the rest of the batch (tau = 1).
        """
        states = np.asarray(states, dtype=np.float32)
        n = states.shape[0]
        if n < 2:
            raise ContractError(f"pair batch needs N >= 2, got {n}")
        rng = self._pair_rng
        same = rng.random(n) < 0.5
        offsets = rng.integers(1, n, size=n)
        partner = np.where(same, np.arange(n), (np.arange(n) + offsets) % n)
        tau = (~same).astype(np.float32)
        s1 = augment_batch(states, self.aug_config_, rng)
        s2 = augment_batch(states[partner], self.aug_config_, rng)
        return s1, s2, tau

    def sndv_target_update(self, s1, s2, tau):
        """One target step on an explicit augmented pair batch."""
        x1 = self._prepared(s1)
        x2 = self._prepared(s2)
        tape1 = self.target_net_.run(x1)
        tape2 = self.target_net_.run(x2)
        loss, dz1, dz2 = sndv_loss(
            tape1.output, tape2.output, tau, hinge=self.hinge, unsquared=self.unsquared
        )
        if not np.isfinite(loss):
            raise NumericError(f"non-finite target loss {loss}")
        if self.target_opt_ is not None:
            _, g1 = tape1.backward(dz1)
            _, g2 = tape2.backward(dz2)
            grads = {f"target.{k}": g1[k] + g2[k] for k in g1}
            self._target_step(grads)
        return loss

    def target_update(self, states, next_states=None):
        if not hasattr(self, "target_net_"):
            self._build(np.asarray(states).shape[1:])
        s1, s2, tau = self.make_pair_batch(states)
        return {"target_loss": self.sndv_target_update(s1, s2, tau)}

    def state_scalars(self):
        scalars = super().state_scalars()
        scalars["pair_rng"] = self._pair_rng.bit_generator.state
        return scalars

    def load_state(self, arrays, scalars, in_shape):
        super().load_state(arrays, scalars, in_shape)
        self._pair_rng.bit_generator.state = scalars["pair_rng"]


class SNDSTD(_TrainedTargetBase):
    """Target trained with the spatio-temporal contrastive objective."""

    variant = "snd-std"
    target_gain = 0.5

    def __init__(
        self,
        feature_dim=64,
        predictor_hidden=512,
        lr=1e-4,
        seed=0,
        target_lr=1e-4,
        beta1=1e-4,
        beta2=1e-4,
    ):
        super().__init__(
            feature_dim=feature_dim,
            predictor_hidden=predictor_hidden,
            lr=lr,
            seed=seed,
            target_lr=target_lr,
        )
        self.beta1 = beta1
        self.beta2 = beta2

    def _aux_params(self):
        rng = stream(self.seed, "aux_init")
        c = self.target_net_.layer_shapes[self.target_net_.local_layer][0]
        from ..nn import orthogonal

        return {
            "wg": orthogonal((self.feature_dim, c), 1.0, rng),
            "wl": orthogonal((c, c), 1.0, rng),
        }

    def stdim_target_update(self, states, next_states):
        """One joint step on the target and both projection matrices."""
        if next_states is None:
            raise ContractError("spatio-temporal update needs successor states")
        x = self._prepared(states)
        x2 = self._prepared(next_states)
        tape_a = self.target_net_.run(x)
        tape_b = self.target_net_.run(x2)
        comps, dzg, dla, dln, dwg, dwl = stdim_losses(
            tape_a.output,
            tape_a.locals,
            tape_b.locals,
            self.aux_params_["wg"],
            self.aux_params_["wl"],
            beta1=self.beta1,
            beta2=self.beta2,
        )
        if not np.isfinite(comps["total"]):
            raise NumericError(f"non-finite target loss {comps['total']}")
        if self.target_opt_ is not None:
            _, ga = tape_a.backward(dzg, dlocals=dla)
            _, gb = tape_b.backward(np.zeros_like(tape_b.output), dlocals=dln)
            grads = {f"target.{k}": ga[k] + gb[k] for k in ga}
            grads["aux.wg"] = dwg.astype(np.float32)
            grads["aux.wl"] = dwl.astype(np.float32)
            self._target_step(grads)
        return comps

    def target_update(self, states, next_states=None):
        comps = self.stdim_target_update(states, next_states)
        return {
            "target_loss": comps["total"],
            "target_gl": comps["gl"],
            "target_ll": comps["ll"],
            "target_l2": comps["l2"],
            "target_sigma": comps["sigma"],
        }


class SNDVIC(_TrainedTargetBase):
    """Target trained with variance, invariance, covariance regularization."""

    variant = "snd-vic"
    target_gain = 0.5

    def __init__(
        self,
        feature_dim=64,
        predictor_hidden=512,
        lr=1e-4,
        seed=0,
        target_lr=1e-4,
        lambda_=1.0,
        mu=1.0,
        nu=1.0 / 25.0,
    ):
        super().__init__(
            feature_dim=feature_dim,
            predictor_hidden=predictor_hidden,
            lr=lr,
            seed=seed,
            target_lr=target_lr,
        )
        self.lambda_ = lambda_
        self.mu = mu
        self.nu = nu

    def vicreg_target_update(self, states, next_states):
        """One target step on consecutive-state feature pairs."""
        if next_states is None:
            raise ContractError("invariance update needs successor states")
        x = self._prepared(states)
        x2 = self._prepared(next_states)
        tape_a = self.target_net_.run(x)
        tape_b = self.target_net_.run(x2)
        comps, dz, dz2 = vicreg_losses(
            tape_a.output,
            tape_b.output,
            lambda_=self.lambda_,
            mu=self.mu,
            nu=self.nu,
        )
        if not np.isfinite(comps["total"]):
            raise NumericError(f"non-finite target loss {comps['total']}")
        if self.target_opt_ is not None:
            _, ga = tape_a.backward(dz)
            _, gb = tape_b.backward(dz2)
            grads = {f"target.{k}": ga[k] + gb[k] for k in ga}
            self._target_step(grads)
        return comps

    def target_update(self, states, next_states=None):
        comps = self.vicreg_target_update(states, next_states)
        return {
            "target_loss": comps["total"],
            "target_invariance": comps["invariance"],
            "target_variance": comps["variance"],
            "target_covariance": comps["covariance"],
        }


VARIANTS = {cls.variant: cls for cls in (RND, SNDV, SNDSTD, SNDVIC)}


def make_motivation(variant, **kwargs):
    """Construct a module by variant name; None/'none' means no motivation."""
    if variant in (None, "none"):
        return None
    if variant not in VARIANTS:
        raise ContractError(
            f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)} or none"
        )
    return VARIANTS[variant](**kwargs)
