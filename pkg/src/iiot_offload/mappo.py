"""Multi-agent PPO with a centralised critic.

Devices share one actor (their state is suffixed with a one-hot device id),
the base station has its own factored actor (one categorical head per device),
and a single critic scores the concatenation of all agent states. Every agent
is trained on the team reward.

The trainer talks to environments through a small duck-typed surface, which
:class:`~iiot_offload.env.OffloadEnv` implements::

    reset(seed); done
    n_devices, n_device_actions, bs_heads, bs_symbols
    device_state_dim, bs_state_dim, global_state_dim
    device_states(), bs_state(), global_state(), device_masks(), bs_masks()
    step_indices(device_idx, bs_idx) -> (team_reward, done)
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_masks, check_states
from .env import BsAction, EnvConfig, OffloadEnv, decode_device_action
from .exceptions import ConfigError
from .nn import MLP, Adam, clip_grad_norm

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "iiot-offload-mappo"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PpoHyper:
    episodes: int = 10_000
    lr: float = 1e-3
    minibatch: int = 128
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    vf_coef: float = 0.2
    ent_coef: float = 0.2
    # linear anneal of the entropy coefficient to this value over training; None keeps it fixed
    ent_coef_final: Optional[float] = None
    adam_eps: float = 1e-5
    epochs: int = 4
    episodes_per_update: int = 10
    hidden: tuple[int, ...] = (64, 64)
    max_grad_norm: Optional[float] = 0.5
    normalize_advantages: bool = True
    divergence_threshold: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        for name in ("gamma", "gae_lambda", "clip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("lr", "adam_eps", "minibatch", "epochs", "episodes_per_update"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.ent_coef_final is not None and self.ent_coef_final < 0:
            raise ConfigError("ent_coef_final must be nonnegative")
        if self.episodes < 0 or self.vf_coef < 0 or self.ent_coef < 0:
            raise ConfigError("episodes and loss coefficients must be nonnegative")
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden layer sizes must be positive")


# ----------------------------------------------------------- distributions
def masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Log-probabilities with invalid entries at ``-inf`` (probability exactly 0)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ValueError("every categorical needs at least one valid action")
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.exp(masked_log_softmax(logits, mask))


def masked_entropy(logp: np.ndarray, mask: np.ndarray) -> np.ndarray:
    p = np.exp(logp)
    return -np.where(mask, p * np.where(mask, logp, 0.0), 0.0).sum(axis=-1)


# --------------------------------------------------------------------- GAE
def gae_advantages(rewards, values, dones, gamma: float, lam: float):
    """Generalised advantage estimates and bootstrapped returns.

    ``values`` carries one more entry than ``rewards``: the value of the state
    following the last transition (ignored when that transition is terminal).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    T = len(rewards)
    if values.shape != (T + 1,) or dones.shape != (T,):
        raise ValueError(f"need len(values) == len(rewards) + 1 == len(dones) + 1, got {len(values)}, {T}, {len(dones)}")
    adv = np.zeros(T)
    running = 0.0
    for t in reversed(range(T)):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
    return adv, adv + values[:T]


def normalize_advantages(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    adv = np.asarray(adv, dtype=float)
    if adv.size < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + eps)


# -------------------------------------------------------------------- loss
def clipped_surrogate(logits, mask, actions, old_logp, advantages, clip: float, ent_coef: float):
    """Clipped policy loss minus the entropy bonus, for a factored categorical.

    Shapes: ``logits``/``mask`` ``(B, H, A)``, ``actions`` ``(B, H)``,
    ``old_logp``/``advantages`` ``(B,)``. Returns ``(loss, dloss/dlogits, diagnostics)``.
    """
    logits = np.asarray(logits, dtype=float)
    for arr in (logits, old_logp, advantages):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite values in PPO inputs")
    B = logits.shape[0]
    logp_all = masked_log_softmax(logits, mask)
    p = np.exp(logp_all)
    onehot = np.zeros_like(logits)
    np.put_along_axis(onehot, actions[..., None], 1.0, axis=-1)
    logp = np.take_along_axis(logp_all, actions[..., None], axis=-1)[..., 0].sum(axis=-1)
    if not np.all(np.isfinite(logp)):
        raise FloatingPointError("an action with zero probability was replayed")

    ratio = np.exp(logp - old_logp)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    pi_loss = -np.mean(np.minimum(surr1, surr2))
    dlogp = -np.where(surr1 <= surr2, surr1, 0.0) / B

    safe_logp = np.where(mask, logp_all, 0.0)
    head_entropy = -(p * safe_logp).sum(axis=-1)
    entropy = head_entropy.sum(axis=-1).mean()
    dlogits = dlogp[:, None, None] * (onehot - p)
    dlogits += ent_coef / B * p * (safe_logp + head_entropy[..., None])
    dlogits = np.where(mask, dlogits, 0.0)

    diag = {
        "policy_loss": float(pi_loss),
        "entropy": float(entropy),
        "approx_kl": float(np.mean(old_logp - logp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "ratio_dev": float(np.mean(np.abs(ratio - 1.0))),
    }
    return float(pi_loss - ent_coef * entropy), dlogits, diag


def value_loss(values, returns, vf_coef: float):
    values = np.asarray(values, dtype=float)
    err = values - returns
    return float(vf_coef * np.mean(err**2)), vf_coef * 2.0 * err / len(err)


def ppo_loss(logits, mask, actions, old_logp, advantages, values, returns, hyper: PpoHyper):
    """Total single-actor PPO objective ``policy + c1 * value - c2 * entropy``.

    Returns ``(loss, {"logits": ..., "values": ...}, diagnostics)``; the
    advantages are normalised first when ``hyper.normalize_advantages`` is set.
    """
    if hyper.normalize_advantages:
        advantages = normalize_advantages(advantages)
    pol, dlogits, diag = clipped_surrogate(logits, mask, actions, old_logp, advantages, hyper.clip, hyper.ent_coef)
    vl, dvalues = value_loss(values, returns, hyper.vf_coef)
    diag["value_loss"] = vl
    return pol + vl, {"logits": dlogits, "values": dvalues}, diag


# ----------------------------------------------------------------- learner
@dataclass(frozen=True)
class AgentDims:
    n_devices: int
    device_state_dim: int
    bs_state_dim: int
    global_state_dim: int
    n_device_actions: int
    bs_heads: int
    bs_symbols: int

    @classmethod
    def from_env(cls, env) -> "AgentDims":
        return cls(**{f.name: int(getattr(env, f.name)) for f in fields(cls)})


def _gumbel_argmax(logp: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    g = -np.log(-np.log(rng.random(logp.shape)))
    return np.argmax(logp + g, axis=-1)


class MappoLearner:
    """Networks, optimisers and sampling state of one training run."""

    def __init__(self, dims: AgentDims, hyper: PpoHyper = PpoHyper(), seed: int = 0):
        self.dims = dims
        self.hyper = hyper
        self.seed = seed
        init_rng = np.random.default_rng([seed, 0])
        self.rng = np.random.default_rng([seed, 1])
        h = list(hyper.hidden)
        d = dims
        self.device_actor = MLP([d.device_state_dim + d.n_devices, *h, d.n_device_actions], rng=init_rng, out_scale=0.01)
        self.bs_actor = MLP([d.bs_state_dim, *h, d.bs_heads * d.bs_symbols], rng=init_rng, out_scale=0.01)
        self.critic = MLP([d.global_state_dim, *h, 1], rng=init_rng)
        self.opts = {
            name: Adam(net.params, lr=hyper.lr, eps=hyper.adam_eps) for name, net in self.networks.items()
        }
        self._ids = np.eye(d.n_devices)
        self.ent_coef = hyper.ent_coef
        self.episodes_done = 0
        self.grad_steps = 0
        self.skipped_updates = 0

    @property
    def networks(self) -> dict[str, MLP]:
        return {"device_actor": self.device_actor, "bs_actor": self.bs_actor, "critic": self.critic}

    # ---------------------------------------------------------- acting
    def device_inputs(self, device_states: np.ndarray) -> np.ndarray:
        return np.hstack([device_states, self._ids])

    def device_log_probs(self, device_states, masks) -> np.ndarray:
        return masked_log_softmax(self.device_actor(self.device_inputs(device_states)), masks)

    def bs_log_probs(self, bs_state, masks) -> np.ndarray:
        logits = self.bs_actor(bs_state).reshape(self.dims.bs_heads, self.dims.bs_symbols)
        return masked_log_softmax(logits, masks)

    def select(self, env, greedy: bool = False):
        """Pick action indices for all agents from ``env``'s current states.

        Returns ``(device_idx, bs_idx, device_logp, bs_logp)``.
        """
        dev_lp = self.device_log_probs(env.device_states(), env.device_masks())
        bs_lp = self.bs_log_probs(env.bs_state(), env.bs_masks())
        if greedy:
            a, b = dev_lp.argmax(axis=-1), bs_lp.argmax(axis=-1)
        else:
            a, b = _gumbel_argmax(dev_lp, self.rng), _gumbel_argmax(bs_lp, self.rng)
        a_lp = np.take_along_axis(dev_lp, a[:, None], axis=1)[:, 0]
        b_lp = float(np.take_along_axis(bs_lp, b[:, None], axis=1).sum())
        return a, b, a_lp, b_lp

    # ------------------------------------------------------ collection
    def rollout(self, env, seed) -> dict[str, np.ndarray]:
        env.reset(seed)
        rec = {k: [] for k in ("dev_x", "dev_mask", "dev_act", "dev_logp", "bs_x", "bs_mask", "bs_act", "bs_logp", "g", "reward", "done")}
        done = False
        while not done:
            ds, dm = env.device_states(), env.device_masks()
            bx, bm = env.bs_state(), env.bs_masks()
            g = env.global_state()
            a, b, a_lp, b_lp = self.select(env)
            r, done = env.step_indices(a, b)
            for k, v in (
                ("dev_x", self.device_inputs(ds)), ("dev_mask", dm), ("dev_act", a), ("dev_logp", a_lp),
                ("bs_x", bx), ("bs_mask", bm), ("bs_act", b), ("bs_logp", b_lp),
                ("g", g), ("reward", r), ("done", float(done)),
            ):
                rec[k].append(v)
        ep = {k: np.asarray(v) for k, v in rec.items()}
        values = self.critic(ep["g"])[:, 0]
        last = 0.0 if done else float(self.critic(env.global_state())[0])
        ep["adv"], ep["ret"] = gae_advantages(
            ep["reward"], np.append(values, last), ep["done"], self.hyper.gamma, self.hyper.gae_lambda
        )
        return ep

    def collect(self, env, seeds) -> dict[str, np.ndarray]:
        episodes = [self.rollout(env, s) for s in seeds]
        return {k: np.concatenate([ep[k] for ep in episodes]) for k in episodes[0]}

    # ---------------------------------------------------------- update
    def _apply(self, name: str, net: MLP, cache, grad_out) -> None:
        grads, _ = clip_grad_norm(net.backward(cache, grad_out), self.hyper.max_grad_norm)
        self.opts[name].step(grads)

    def update(self, batch: dict[str, np.ndarray]) -> list[dict]:
        hp, d = self.hyper, self.dims
        T = len(batch["reward"])
        bs_active = bool((batch["bs_mask"].sum(axis=-1) > 1).any())
        diags = []
        for _ in range(hp.epochs):
            order = self.rng.permutation(T)
            for start in range(0, T, hp.minibatch):
                idx = order[start : start + hp.minibatch]
                adv = batch["adv"][idx]
                if hp.normalize_advantages:
                    adv = normalize_advantages(adv)
                n = len(idx)

                dev_logits, dev_cache = self.device_actor.forward_cache(batch["dev_x"][idx].reshape(n * d.n_devices, -1))
                try:
                    dl, dgrad, diag = clipped_surrogate(
                        dev_logits[:, None, :],
                        batch["dev_mask"][idx].reshape(n * d.n_devices, 1, -1),
                        batch["dev_act"][idx].reshape(-1, 1),
                        batch["dev_logp"][idx].reshape(-1),
                        np.repeat(adv, d.n_devices),
                        hp.clip,
                        self.ent_coef,
                    )
                except FloatingPointError as exc:
                    log.warning("skipping minibatch: %s", exc)
                    self.skipped_updates += 1
                    continue
                if diag["ratio_dev"] > hp.divergence_threshold:
                    log.warning("skipping minibatch: mean |ratio - 1| = %.3g", diag["ratio_dev"])
                    self.skipped_updates += 1
                    continue
                self._apply("device_actor", self.device_actor, dev_cache, dgrad[:, 0, :])

                if bs_active:
                    bs_logits, bs_cache = self.bs_actor.forward_cache(batch["bs_x"][idx])
                    _, bgrad, bdiag = clipped_surrogate(
                        bs_logits.reshape(n, d.bs_heads, d.bs_symbols),
                        batch["bs_mask"][idx],
                        batch["bs_act"][idx],
                        batch["bs_logp"][idx],
                        adv,
                        hp.clip,
                        self.ent_coef,
                    )
                    self._apply("bs_actor", self.bs_actor, bs_cache, bgrad.reshape(n, -1))
                    diag["bs_entropy"] = bdiag["entropy"]

                v, v_cache = self.critic.forward_cache(batch["g"][idx])
                vl, dv = value_loss(v[:, 0], batch["ret"][idx], hp.vf_coef)
                self._apply("critic", self.critic, v_cache, dv[:, None])
                diag["value_loss"] = vl
                diags.append(diag)
                self.grad_steps += 1
        return diags

    # ------------------------------------------------------ checkpoint
    def save(self, path, extra: Optional[dict] = None) -> None:
        """Write every parameter, optimiser moment and RNG state to an ``.npz`` file.

        Layout: arrays ``<net>/param<i>``, ``<net>/adam_m<i>``, ``<net>/adam_v<i>``
        plus a JSON string ``__meta__`` holding format/version, dims, hyper,
        Adam step counts, RNG state and counters.
        """
        arrays = {}
        for name, net in self.networks.items():
            opt = self.opts[name]
            for i, (p, m, v) in enumerate(zip(net.params, opt.m, opt.v)):
                arrays[f"{name}/param{i}"] = p
                arrays[f"{name}/adam_m{i}"] = m
                arrays[f"{name}/adam_v{i}"] = v
        meta = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "dims": asdict(self.dims),
            "hyper": asdict(self.hyper),
            "seed": self.seed,
            "adam_t": {name: opt.t for name, opt in self.opts.items()},
            "rng": self.rng.bit_generator.state,
            "episodes_done": self.episodes_done,
            "grad_steps": self.grad_steps,
            "ent_coef": self.ent_coef,
            "skipped_updates": self.skipped_updates,
            "extra": extra or {},
        }
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)

    @classmethod
    def load(cls, path) -> "MappoLearner":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != CHECKPOINT_FORMAT:
                raise ConfigError(f"{path}: not a MAPPO checkpoint")
            if meta["version"] != CHECKPOINT_VERSION:
                raise ConfigError(f"{path}: unsupported checkpoint version {meta['version']}")
            hyper = dict(meta["hyper"])
            hyper["hidden"] = tuple(hyper["hidden"])
            learner = cls(AgentDims(**meta["dims"]), PpoHyper(**hyper), seed=meta["seed"])
            for name, net in learner.networks.items():
                opt = learner.opts[name]
                for i in range(len(net.params)):
                    net.params[i][...] = data[f"{name}/param{i}"]
                    opt.m[i][...] = data[f"{name}/adam_m{i}"]
                    opt.v[i][...] = data[f"{name}/adam_v{i}"]
                opt.t = meta["adam_t"][name]
        learner.rng.bit_generator.state = meta["rng"]
        learner.episodes_done = meta["episodes_done"]
        learner.grad_steps = meta["grad_steps"]
        learner.ent_coef = meta["ent_coef"]
        learner.skipped_updates = meta["skipped_updates"]
        learner.extra = meta["extra"]
        return learner


def train(
    env_factory: Callable[[], object],
    hyper: PpoHyper = PpoHyper(),
    seed: int = 0,
    n_episodes: Optional[int] = None,
    eval_fn: Optional[Callable[[MappoLearner], dict]] = None,
    eval_interval: int = 100,
    learner: Optional[MappoLearner] = None,
):
    """Run the collect/update loop.

    Returns ``(learner, log)`` where ``log`` is a list of
    ``{"episode": e, **eval_fn(learner)}`` rows, one at episode 0, one every
    ``eval_interval`` training episodes and one at the end.
    """
    n_episodes = hyper.episodes if n_episodes is None else n_episodes
    env = env_factory()
    learner = MappoLearner(AgentDims.from_env(env), hyper, seed) if learner is None else learner
    seed_stream = np.random.default_rng([seed, 2])
    history = []

    def evaluate():
        if eval_fn is not None:
            history.append({"episode": learner.episodes_done, **eval_fn(learner)})

    evaluate()
    next_eval = learner.episodes_done + eval_interval
    start = learner.episodes_done
    target = start + n_episodes
    while learner.episodes_done < target:
        k = min(hyper.episodes_per_update, target - learner.episodes_done)
        if hyper.ent_coef_final is not None:
            frac = (learner.episodes_done - start) / n_episodes
            learner.ent_coef = hyper.ent_coef + frac * (hyper.ent_coef_final - hyper.ent_coef)
        seeds = seed_stream.integers(0, 2**63 - 1, size=k)
        diags = learner.update(learner.collect(env, seeds))
        learner.episodes_done += k
        if diags and log.isEnabledFor(logging.DEBUG):
            log.debug(
                "episodes=%d entropy=%.3f value_loss=%.4f kl=%.4f",
                learner.episodes_done,
                np.mean([x["entropy"] for x in diags]),
                np.mean([x["value_loss"] for x in diags]),
                np.mean([x["approx_kl"] for x in diags]),
            )
        if learner.episodes_done >= next_eval or learner.episodes_done == target:
            evaluate()
            next_eval += eval_interval
    return learner, history


# --------------------------------------------------------------- estimator
class MappoOffloader(BaseEstimator):
    """Learned offloading/access/signalling policy with an estimator interface.

    ``fit`` trains on environments built from ``env_config`` restricted to
    ``scheme`` (or on ``env``, a zero-argument factory, when given).
    Fitted attributes: ``learner_``, ``history_``, ``env_config_``.
    """

    def __init__(
        self,
        scheme: str = "combined",
        env_config: Optional[EnvConfig] = None,
        n_episodes: int = 10_000,
        lr: float = 1e-3,
        minibatch: int = 128,
        gamma: float = 0.99,
        gae_lambda: float = 0.95,
        clip: float = 0.2,
        vf_coef: float = 0.2,
        ent_coef: float = 0.2,
        ent_coef_final: Optional[float] = None,
        adam_eps: float = 1e-5,
        epochs: int = 4,
        episodes_per_update: int = 10,
        hidden: tuple = (64, 64),
        max_grad_norm: Optional[float] = 0.5,
        normalize_advantages: bool = True,
        eval_interval: int = 100,
        random_state: int = 0,
    ):
        self.scheme = scheme
        self.env_config = env_config
        self.n_episodes = n_episodes
        self.lr = lr
        self.minibatch = minibatch
        self.gamma = gamma
        self.gae_lambda = gae_lambda
        self.clip = clip
        self.vf_coef = vf_coef
        self.ent_coef = ent_coef
        self.ent_coef_final = ent_coef_final
        self.adam_eps = adam_eps
        self.epochs = epochs
        self.episodes_per_update = episodes_per_update
        self.hidden = hidden
        self.max_grad_norm = max_grad_norm
        self.normalize_advantages = normalize_advantages
        self.eval_interval = eval_interval
        self.random_state = random_state

    def hyper(self) -> PpoHyper:
        return PpoHyper(
            episodes=self.n_episodes,
            lr=self.lr,
            minibatch=self.minibatch,
            gamma=self.gamma,
            gae_lambda=self.gae_lambda,
            clip=self.clip,
            vf_coef=self.vf_coef,
            ent_coef=self.ent_coef,
            ent_coef_final=self.ent_coef_final,
            adam_eps=self.adam_eps,
            epochs=self.epochs,
            episodes_per_update=self.episodes_per_update,
            hidden=tuple(self.hidden),
            max_grad_norm=self.max_grad_norm,
            normalize_advantages=self.normalize_advantages,
        )

    def fit(self, env=None, y=None, eval_fn=None):
        from .baselines import get_scheme, scheme_env_config

        if not get_scheme(self.scheme).learned:
            raise ConfigError(f"scheme {self.scheme!r} has no trainable policy")
        self.env_config_ = scheme_env_config(self.env_config or EnvConfig(), self.scheme)
        factory = env if env is not None else (lambda: OffloadEnv(self.env_config_))
        self.learner_, self.history_ = train(
            factory,
            self.hyper(),
            seed=int(self.random_state),
            eval_fn=eval_fn,
            eval_interval=self.eval_interval,
        )
        return self

    def act(self, env, greedy: bool = True):
        """Joint ``(device actions, BS action)`` for the current slot of ``env``."""
        check_is_fitted(self)
        a, b, _, _ = self.learner_.select(env, greedy=greedy)
        allow_local = getattr(env.config, "allow_local", True)
        return [decode_device_action(i, allow_local) for i in a], BsAction(tuple(int(x) for x in b))

    def predict_proba(self, device_states, device_masks) -> np.ndarray:
        """Action distributions of every device for a batch of joint device states.

        ``device_states`` has shape ``(n_devices, state_dim)`` or
        ``(batch, n_devices, state_dim)``; masks match with the action axis last.
        """
        check_is_fitted(self)
        d = self.learner_.dims
        X = check_states(device_states, (d.n_devices, d.device_state_dim))
        M = check_masks(device_masks, X.shape[:-1] + (d.n_device_actions,))
        inputs = np.concatenate([X, np.broadcast_to(self.learner_._ids, X.shape[:-1] + (d.n_devices,))], axis=-1)
        return masked_softmax(self.learner_.device_actor(inputs), M)

    def predict(self, device_states, device_masks) -> np.ndarray:
        """Greedy device action indices."""
        return self.predict_proba(device_states, device_masks).argmax(axis=-1)

    def save(self, path) -> None:
        check_is_fitted(self)
        self.learner_.save(path, extra={"scheme": self.scheme, "params": _jsonable(self.get_params(deep=False))})

    @classmethod
    def load(cls, path) -> "MappoOffloader":
        learner = MappoLearner.load(path)
        params = dict(learner.extra.get("params", {}))
        if params.get("env_config") is not None:
            from .config import env_config_from_dict

            params["env_config"] = env_config_from_dict(params["env_config"])
        params["hidden"] = tuple(params.get("hidden", learner.hyper.hidden))
        est = cls(**params)
        from .baselines import scheme_env_config

        est.env_config_ = scheme_env_config(est.env_config or EnvConfig(), est.scheme)
        est.learner_ = learner
        est.history_ = []
        return est


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, EnvConfig):
            from .config import env_config_to_dict

            v = env_config_to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out
