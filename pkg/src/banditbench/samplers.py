"""Posterior sampling by noisy optimization: SGFS, constant SGD, and
Bayes-by-backprop.

The first two treat the network iterate itself as the posterior sample: each
training period runs a handful of preconditioned stochastic-gradient steps,
and the agent acts greedily on whatever the chain currently holds.  Both
precondition with a diagonal EMA of squared gradients (an empirical Fisher
stand-in).  Bayes-by-backprop instead maintains a factorized Gaussian over
every weight and draws a fresh network at decision time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import Agent, HistoryBuffer, Observation
from .mlp import MLP, RMSProp, masked_mse, mlp_backward, mlp_forward, mlp_init, mlp_predict

DIAG_FLOOR = 1e-10

SeedLike = Union[int, np.random.SeedSequence]


def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class FisherEMA:
    """Diagonal EMA of squared gradients, one array per parameter."""

    def __init__(self, params: Sequence[np.ndarray], decay: float = 0.9):
        if not 0.0 <= decay < 1.0:
            raise ValueError("decay must lie in [0, 1)")
        self.decay = decay
        self.diag = [np.zeros_like(p) for p in params]

    def update(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.diag):
            raise ValueError("gradient structure mismatch")
        for d, g in zip(self.diag, grads):
            d *= self.decay
            d += (1.0 - self.decay) * g * g


@dataclass(frozen=True)
class SGFSConfig:
    """Step size, injected-noise scale, and the diagonal floor."""

    step_size: float = 0.014
    noise_scale: float = 0.75
    diag_floor: float = DIAG_FLOOR

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


def sgfs_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    ema: FisherEMA,
    data_count: int,
    cfg: SGFSConfig,
    rng: Optional[np.random.Generator] = None,
    skip_noise: bool = False,
) -> None:
    """One Fisher-scored step: theta -= eps*H*g, plus matched Gaussian noise.

    H = (2/N) / ((1 + eps) * diag) elementwise, with the EMA diagonal standing
    in for both curvature factors.  The noise term
    noise_scale * sqrt(eps) * H * sqrt(diag) * nu is omitted during burn-in
    (``skip_noise``) or when the noise scale is zero, in which case no random
    draws are consumed at all.
    """
    if data_count < 1:
        raise ValueError("data_count must be positive")
    eps = cfg.step_size
    inject = not skip_noise and cfg.noise_scale > 0.0
    if inject and rng is None:
        raise ValueError("rng required when noise is enabled")
    for p, g, d in zip(params, grads, ema.diag):
        diag = np.maximum(d, cfg.diag_floor)
        h = (2.0 / data_count) / ((1.0 + eps) * diag)
        p -= eps * h * g
        if inject:
            p += cfg.noise_scale * math.sqrt(eps) * h * np.sqrt(diag) * rng.standard_normal(p.shape)


@dataclass(frozen=True)
class ConstSGDConfig:
    """Constant-SGD preconditioning; noise_scale is off unless set."""

    noise_scale: float = 0.0
    diag_floor: float = DIAG_FLOOR

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


def const_sgd_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    ema: FisherEMA,
    batch_size: int,
    data_count: int,
    cfg: ConstSGDConfig = ConstSGDConfig(),
    rng: Optional[np.random.Generator] = None,
) -> None:
    """theta -= eps_i * g with per-parameter eps_i = 2 (S/N) / diag_i.

    The batch-to-data ratio S/N and the inverse EMA diagonal give the step
    size under which plain SGD's stationary distribution matches the target
    scale.  An optional sqrt(eps)-shaped Gaussian term can be injected.
    """
    if data_count < 1 or batch_size < 1:
        raise ValueError("batch_size and data_count must be positive")
    inject = cfg.noise_scale > 0.0
    if inject and rng is None:
        raise ValueError("rng required when noise is enabled")
    ratio = 2.0 * batch_size / data_count
    for p, g, d in zip(params, grads, ema.diag):
        eps = ratio / np.maximum(d, cfg.diag_floor)
        p -= eps * g
        if inject:
            p += cfg.noise_scale * np.sqrt(eps) * rng.standard_normal(p.shape)


class _SGChainAgent(Agent):
    """Shared scaffolding: greedy choice on the current chain iterate."""

    def __init__(
        self,
        dim: int,
        num_actions: int,
        seed: SeedLike,
        *,
        train_every: int,
        batches_per_period: int,
        batch_size: int,
        ema_decay: float,
        burn_in: int,
        hidden: Sequence[int],
        name: str,
    ):
        if train_every < 1 or batches_per_period < 1 or batch_size < 1:
            raise ValueError("cadence counts must be positive")
        if burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        init_ss, train_ss = _seed_sequence(seed).spawn(2)
        self.net = mlp_init([dim, *hidden, num_actions], np.random.default_rng(init_ss))
        self.ema = FisherEMA(self.net.parameters(), ema_decay)
        self.train_rng = np.random.default_rng(train_ss)
        self.buffer = HistoryBuffer(dim, num_actions)
        self.train_every = train_every
        self.batches_per_period = batches_per_period
        self.batch_size = batch_size
        self.burn_in = burn_in
        self.batches_done = 0  # lifetime counter; burn-in is measured on it
        self.name = name

    def choose(self, context: np.ndarray, rng: np.random.Generator) -> int:
        return int(np.argmax(mlp_predict(self.net, context)[0]))

    def observe(self, obs: Observation) -> None:
        self.buffer.append(obs)

    def _due(self, step: int) -> bool:
        return step >= 0 and step % self.train_every == 0 and len(self.buffer) > 0

    def _batch_grads(self) -> list[np.ndarray]:
        n = len(self.buffer)
        idx = self.train_rng.integers(0, n, size=self.batch_size)
        out, cache = mlp_forward(self.net, self.buffer.contexts[idx])
        _, dout = masked_mse(out, self.buffer.actions[idx], self.buffer.rewards[idx])
        return mlp_backward(self.net, cache, dout)

    def maybe_train(self, step: int) -> None:
        if not self._due(step):
            return
        params = self.net.parameters()
        for _ in range(self.batches_per_period):
            grads = self._batch_grads()
            self.ema.update(grads)
            self._apply(params, grads, len(self.buffer))
            self.batches_done += 1

    def _apply(self, params, grads, data_count) -> None:
        raise NotImplementedError


class SGFSAgent(_SGChainAgent):
    """Stochastic gradient Fisher scoring chain as the posterior."""

    def __init__(
        self,
        dim: int,
        num_actions: int,
        seed: SeedLike,
        *,
        step_size: float = 0.014,
        noise_scale: float = 0.75,
        ema_decay: float = 0.9,
        burn_in: int = 500,
        train_every: int = 20,
        batches_per_period: int = 20,
        batch_size: int = 512,
        hidden: Sequence[int] = (100, 100),
        name: str = "SGFS",
    ):
        super().__init__(
            dim, num_actions, seed,
            train_every=train_every, batches_per_period=batches_per_period,
            batch_size=batch_size, ema_decay=ema_decay, burn_in=burn_in,
            hidden=hidden, name=name,
        )
        self.cfg = SGFSConfig(step_size=step_size, noise_scale=noise_scale)

    def _apply(self, params, grads, data_count) -> None:
        sgfs_step(
            params, grads, self.ema, data_count, self.cfg,
            rng=self.train_rng, skip_noise=self.batches_done < self.burn_in,
        )


class ConstSGDAgent(_SGChainAgent):
    """Constant-step SGD chain as the posterior."""

    def __init__(
        self,
        dim: int,
        num_actions: int,
        seed: SeedLike,
        *,
        noise_scale: float = 0.0,
        ema_decay: float = 0.9,
        burn_in: int = 500,
        train_every: int = 20,
        batches_per_period: int = 20,
        batch_size: int = 512,
        hidden: Sequence[int] = (100, 100),
        name: str = "ConstSGD",
    ):
        super().__init__(
            dim, num_actions, seed,
            train_every=train_every, batches_per_period=batches_per_period,
            batch_size=batch_size, ema_decay=ema_decay, burn_in=burn_in,
            hidden=hidden, name=name,
        )
        self.cfg = ConstSGDConfig(noise_scale=noise_scale)

    def _apply(self, params, grads, data_count) -> None:
        # Burn-in for plain constant SGD means "optimize first"; the update
        # rule is the same either way unless noise injection is enabled.
        rng = self.train_rng if self.cfg.noise_scale > 0 else None
        if self.batches_done < self.burn_in and self.cfg.noise_scale > 0:
            const_sgd_step(params, grads, self.ema, self.batch_size, data_count,
                           ConstSGDConfig(noise_scale=0.0, diag_floor=self.cfg.diag_floor))
        else:
            const_sgd_step(params, grads, self.ema, self.batch_size, data_count,
                           self.cfg, rng)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def softplus_inverse(y: float) -> float:
    if y <= 0:
        raise ValueError("softplus is positive")
    return y + math.log(-math.expm1(-y))


def gaussian_kl(mu: np.ndarray, sigma_q: np.ndarray, sigma_p: float) -> float:
    """Closed-form KL(N(mu, diag sigma_q^2) || N(0, sigma_p^2 I)), summed."""
    per = (
        np.log(sigma_p) - np.log(sigma_q)
        + (sigma_q * sigma_q + mu * mu) / (2.0 * sigma_p * sigma_p)
        - 0.5
    )
    return float(np.sum(per))


class VariationalNet:
    """Factorized Gaussian over every MLP parameter.

    Each parameter w has a mean mu and a pre-stddev rho with
    stddev = softplus(rho); sampling uses the reparameterization
    w = mu + softplus(rho) * nu.  rho is initialized so the stddev starts at
    5% of the prior scale.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        prior_sigma: float,
        rng: np.random.Generator,
    ):
        if prior_sigma <= 0:
            raise ValueError("prior_sigma must be positive")
        self.prior_sigma = prior_sigma
        self.sizes = tuple(int(s) for s in sizes)
        self.mu = mlp_init(self.sizes, rng)
        rho0 = softplus_inverse(0.05 * prior_sigma)
        self.rho = [np.full_like(p, rho0) for p in self.mu.parameters()]

    def parameters(self) -> list[np.ndarray]:
        """mu arrays followed by rho arrays, for a single optimizer."""
        return self.mu.parameters() + self.rho

    def stddevs(self) -> list[np.ndarray]:
        return [softplus(r) for r in self.rho]

    def kl_to_prior(self) -> float:
        total = 0.0
        for m, s in zip(self.mu.parameters(), self.stddevs()):
            total += gaussian_kl(m, s, self.prior_sigma)
        return total

    def _assemble(self, flat: list[np.ndarray]) -> MLP:
        weights, biases = [], []
        it = iter(flat)
        for _ in range(self.mu.num_layers):
            weights.append(next(it))
            biases.append(next(it))
        return MLP(weights, biases)

    def sample(
        self, rng: Optional[np.random.Generator] = None,
        noise: Optional[list[np.ndarray]] = None,
    ) -> tuple[MLP, list[np.ndarray]]:
        """Draw a concrete network; returns it with the noise used."""
        mus = self.mu.parameters()
        if noise is None:
            if rng is None:
                raise ValueError("either rng or noise must be given")
            noise = [rng.standard_normal(p.shape) for p in mus]
        flat = [m + s * n for m, s, n in zip(mus, self.stddevs(), noise)]
        return self._assemble(flat), noise


def bbb_loss_and_grads(
    vnet: VariationalNet,
    contexts: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    total_count: int,
    noise_sigma: float,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[list[np.ndarray]] = None,
) -> tuple[float, float, list[np.ndarray]]:
    """Single-sample variational loss and its gradients.

    loss = KL(q || prior) / total_count + mean masked Gaussian NLL, with the
    per-observation NLL (y - yhat)^2 / (2 sigma^2) (log-normalizer constant
    dropped).  The KL term is closed-form; only the likelihood term is
    estimated with one reparameterized weight sample.  Gradients are returned
    in ``vnet.parameters()`` order (mu arrays then rho arrays).
    """
    if total_count < 1:
        raise ValueError("total_count must be positive")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    sampled, noise = vnet.sample(rng, noise)
    out, cache = mlp_forward(sampled, contexts)
    n = out.shape[0]
    rows = np.arange(n)
    acts = np.asarray(actions, dtype=np.int64)
    diff = out[rows, acts] - np.asarray(rewards, dtype=np.float64)
    var = noise_sigma * noise_sigma
    nll = float(np.mean(diff * diff) / (2.0 * var))
    dout = np.zeros_like(out)
    dout[rows, acts] = diff / (var * n)
    dw = mlp_backward(sampled, cache, dout)

    mus = vnet.mu.parameters()
    sigmas = vnet.stddevs()
    kl = vnet.kl_to_prior()
    loss = kl / total_count + nll
    pvar = vnet.prior_sigma * vnet.prior_sigma
    dmu, drho = [], []
    for m, r, s, g, nu in zip(mus, vnet.rho, sigmas, dw, noise):
        gate = 1.0 / (1.0 + np.exp(-r))  # d softplus / d rho
        dmu.append(g + (m / pvar) / total_count)
        dkl_dsigma = (-1.0 / s + s / pvar) / total_count
        drho.append((g * nu + dkl_dsigma) * gate)
    return loss, kl, dmu + drho


class BayesByBackpropAgent(Agent):
    """Thompson sampling from a mean-field variational weight posterior.

    Each decision draws a full network from q.  Training periods minimize the
    single-sample variational loss with RMSProp; early periods can run a long
    ramp of extra mini-batches (``ramp_initial`` decaying linearly to the
    configured count over ``ramp_periods`` periods), which the long-horizon
    presets use to get the posterior moving.
    """

    def __init__(
        self,
        dim: int,
        num_actions: int,
        seed: SeedLike,
        *,
        prior_sigma: float = 1.0,
        noise_sigma: float = 0.1,
        lr: float = 0.01,
        train_every: int = 20,
        batches_per_period: int = 100,
        batch_size: int = 512,
        ramp_initial: Optional[int] = None,
        ramp_periods: int = 100,
        hidden: Sequence[int] = (100, 100),
        name: str = "BBB",
    ):
        if train_every < 1 or batches_per_period < 1 or batch_size < 1:
            raise ValueError("cadence counts must be positive")
        if lr <= 0:
            raise ValueError("lr must be positive")
        init_ss, train_ss = _seed_sequence(seed).spawn(2)
        self.vnet = VariationalNet(
            [dim, *hidden, num_actions], prior_sigma, np.random.default_rng(init_ss)
        )
        self.opt = RMSProp(self.vnet.parameters())
        self.train_rng = np.random.default_rng(train_ss)
        self.buffer = HistoryBuffer(dim, num_actions)
        self.noise_sigma = noise_sigma
        self.lr = lr
        self.train_every = train_every
        self.batches_per_period = batches_per_period
        self.batch_size = batch_size
        self.ramp_initial = ramp_initial
        self.ramp_periods = ramp_periods
        self.period = 0
        self.name = name

    def _period_batches(self) -> int:
        final = self.batches_per_period
        if self.ramp_initial is None or self.period >= self.ramp_periods:
            return final
        ramped = round(
            self.ramp_initial
            - self.period * (self.ramp_initial - final) / self.ramp_periods
        )
        return max(final, int(ramped))

    def choose(self, context: np.ndarray, rng: np.random.Generator) -> int:
        sampled, _ = self.vnet.sample(rng)
        return int(np.argmax(mlp_predict(sampled, context)[0]))

    def observe(self, obs: Observation) -> None:
        self.buffer.append(obs)

    def maybe_train(self, step: int) -> None:
        if not (step >= 0 and step % self.train_every == 0 and len(self.buffer) > 0):
            return
        n = len(self.buffer)
        params = self.vnet.parameters()
        for _ in range(self._period_batches()):
            idx = self.train_rng.integers(0, n, size=self.batch_size)
            _, _, grads = bbb_loss_and_grads(
                self.vnet,
                self.buffer.contexts[idx],
                self.buffer.actions[idx],
                self.buffer.rewards[idx],
                total_count=n,
                noise_sigma=self.noise_sigma,
                rng=self.train_rng,
            )
            self.opt.step(params, grads, self.lr)
        self.period += 1
