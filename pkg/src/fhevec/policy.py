"""Hierarchical linear-softmax policy and its policy-gradient trainer.

The rule head scores every catalog rule plus END from a state feature vector;
illegal rules are masked to probability zero. The location head scores the
first ``SITE_CAP`` match sites of the chosen rule from per-site features
crossed with the rule's one-hot (a shared block plus one block per rule).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import END, Action, Env, EnvConfig, EnvState, r_final, r_step
from .ir import (Add, Const, Mul, Neg, Program, RotL, Sub, Var, Vec, VecAdd, VecMul, VecNeg,
                 VecSub, unique_nodes)
from .rewrite import Catalog, Site, apply_path, catalog as default_catalog
from .search import SearchResult

log = logging.getLogger(__name__)

SITE_CAP = 32
FORMAT_VERSION = 1
OP_CLASSES = (Add, Sub, Mul, Neg, VecAdd, VecSub, VecMul, VecNeg, RotL, Vec, Var, Const)
N_GLOBAL = len(OP_CLASSES) + 6
N_SITE = 4


class EmptyCorpus(ValueError):
    pass


def n_state_features(n_rules: int) -> int:
    return N_GLOBAL + n_rules


def state_features(s: EnvState, counts: list[int], max_steps: int) -> np.ndarray:
    body = s.program.body
    key = "class-counts"
    cls_counts = body.memo.get(key)
    if cls_counts is None:
        tally = dict.fromkeys(OP_CLASSES, 0)
        for n in unique_nodes(body):
            tally[type(n)] += 1
        cls_counts = body.memo[key] = [tally[c] for c in OP_CLASSES]
    f = np.empty(N_GLOBAL + len(counts))
    f[:len(OP_CLASSES)] = np.log1p(cls_counts)
    g = len(OP_CLASSES)
    f[g] = body.depth / 10.0
    f[g + 1] = body.mult_depth / 10.0
    f[g + 2] = math.log1p(s.last_cost) / 10.0
    f[g + 3] = s.step_count / max_steps
    f[g + 4] = math.log1p(body.width) / 4.0
    f[g + 5] = 1.0
    f[N_GLOBAL:] = np.log1p(np.minimum(counts, SITE_CAP)) / math.log1p(SITE_CAP)
    return f


def site_features(env: Env, s: EnvState, rule_index: int, sites: list[Site]) -> np.ndarray:
    """Rows of (subtree size, subtree depth, immediate reward, ordinal) per site."""
    rule = env.catalog[rule_index]
    body = s.program.body
    rows = np.empty((len(sites), N_SITE))
    for i, site in enumerate(sites):
        node = body
        for k in site.path:
            node = node.kids[k]
        child = apply_path(rule, body, site.path)
        r = r_step(s.last_cost, env.cfg.cost(child))
        rows[i] = (math.log1p(node.size) / 5.0, node.depth / 10.0,
                   max(-1.0, min(1.0, r)), i / SITE_CAP)
    return rows


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass
class Policy:
    W: np.ndarray            # (F, R + 1): rule head, last column is END
    theta: np.ndarray        # (R + 1, N_SITE): row 0 shared, row 1 + r for rule r
    catalog_version: str
    f_shift: np.ndarray = field(default=None)
    f_scale: np.ndarray = field(default=None)

    def __post_init__(self):
        F = self.W.shape[0]
        if self.f_shift is None:
            self.f_shift = np.zeros(F)
        if self.f_scale is None:
            self.f_scale = np.ones(F)
        if self.theta.shape != (self.W.shape[1], N_SITE):
            raise ValueError("location head does not match the rule head")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.theta))):
            raise ValueError("policy weights must be finite")

    @classmethod
    def uniform(cls, cat: Catalog | None = None) -> Policy:
        cat = cat or default_catalog()
        R = len(cat)
        return cls(np.zeros((n_state_features(R), R + 1)), np.zeros((R + 1, N_SITE)), cat.version)

    @property
    def n_rules(self) -> int:
        return self.W.shape[1] - 1

    def copy(self) -> Policy:
        return Policy(self.W.copy(), self.theta.copy(), self.catalog_version,
                      self.f_shift.copy(), self.f_scale.copy())

    def normalize(self, f: np.ndarray) -> np.ndarray:
        return (f - self.f_shift) / self.f_scale

    def rule_probs(self, f: np.ndarray, counts) -> np.ndarray:
        """Masked softmax over rules + END; illegal entries are exactly 0."""
        z = self.normalize(f) @ self.W
        legal = np.append(np.asarray(counts) > 0, True)
        out = np.zeros_like(z)
        out[legal] = _softmax(z[legal])
        return out

    def site_probs(self, rule_index: int, rows: np.ndarray) -> np.ndarray:
        return _softmax(rows @ (self.theta[0] + self.theta[1 + rule_index]))

    # -- serialization

    def dumps(self) -> str:
        def row(a: np.ndarray) -> str:
            return " ".join(repr(float(x)) for x in a.ravel())
        lines = [f"fhevec-policy {FORMAT_VERSION}", f"catalog {self.catalog_version}",
                 f"shape_W {self.W.shape[0]} {self.W.shape[1]}",
                 f"shape_theta {self.theta.shape[0]} {self.theta.shape[1]}",
                 f"f_shift {row(self.f_shift)}", f"f_scale {row(self.f_scale)}",
                 f"W {row(self.W)}", f"theta {row(self.theta)}"]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str, cat: Catalog | None = None) -> Policy:
        kv = {}
        for line in text.splitlines():
            if line.strip():
                k, _, v = line.partition(" ")
                kv[k] = v.split()
        if kv.get("fhevec-policy") != [str(FORMAT_VERSION)]:
            raise ValueError("not a policy file (or unsupported format version)")
        version = kv["catalog"][0]
        if cat is not None and version != cat.version:
            raise ValueError(f"policy trained for catalog {version}, current is {cat.version}")
        fw, rw = map(int, kv["shape_W"])
        ft, rt = map(int, kv["shape_theta"])
        arr = lambda k: np.array([float(x) for x in kv[k]])  # noqa: E731
        return cls(arr("W").reshape(fw, rw), arr("theta").reshape(ft, rt), version,
                   arr("f_shift"), arr("f_scale"))

    @classmethod
    def load(cls, path: str | Path, cat: Catalog | None = None) -> Policy:
        return cls.loads(Path(path).read_text(encoding="utf-8"), cat)


# ---------------------------------------------------------------------------
# episodes


@dataclass
class StepRecord:
    f: np.ndarray
    counts: np.ndarray
    rule: int                       # n_rules means END
    rows: np.ndarray | None         # site features of the chosen rule
    site: int
    reward: float
    logp: float = 0.0               # behaviour log-probability (for PPO)


@dataclass
class Episode:
    steps: list[StepRecord]
    terminal_reward: float
    final_state: EnvState
    best_state: EnvState

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]


def _decide(pol: Policy, env: Env, s: EnvState, rng: np.random.Generator | None):
    """Choose an action; ``rng=None`` means argmax (greedy decode)."""
    sites = env.sites(s)
    counts = np.array([len(x) for x in sites])
    f = state_features(s, counts.tolist(), env.cfg.max_steps)
    p = pol.rule_probs(f, counts)
    R = pol.n_rules
    a = int(np.argmax(p)) if rng is None else int(rng.choice(len(p), p=p))
    if a == R:
        return END, StepRecord(f, counts, a, None, 0, 0.0, math.log(p[a]))
    capped = sites[a][:SITE_CAP]
    rows = site_features(env, s, a, capped)
    q = pol.site_probs(a, rows)
    j = int(np.argmax(q)) if rng is None else int(rng.choice(len(q), p=q))
    return Action(a, j), StepRecord(f, counts, a, rows, j, 0.0, math.log(p[a]) + math.log(q[j]))


def run_episode(p: Program, pol: Policy, env: Env, rng: np.random.Generator | None) -> Episode:
    s = env.reset(p)
    best = s
    steps: list[StepRecord] = []
    done = False
    while not done:
        action, rec = _decide(pol, env, s, rng)
        s, reward, done = env.step(s, action)
        rec.reward = reward
        steps.append(rec)
        if s.last_cost < best.last_cost:
            best = s
    return Episode(steps, r_final(s.initial_cost, s.last_cost), s, best)


def sample_episode(p: Program, pol: Policy, rng: np.random.Generator,
                   env: Env | None = None) -> Episode:
    env = env or Env()
    _check(pol, env)
    return run_episode(p, pol, env, rng)


def _check(pol: Policy, env: Env) -> None:
    if pol.catalog_version != env.catalog.version or pol.n_rules != len(env.catalog):
        raise ValueError("policy does not match the rule catalog")


def policy_optimize(p: Program, pol: Policy, mode: str = "greedy", samples: int = 16,
                    seed: int = 0, env_cfg: EnvConfig = EnvConfig(), guard: bool = True,
                    cat: Catalog | None = None) -> SearchResult:
    """Greedy decode (``mode='greedy'``) or best of ``samples`` sampled episodes.

    With ``guard`` the cheapest state visited is returned rather than the last one.
    """
    env = Env(env_cfg, cat)
    _check(pol, env)
    if mode == "greedy":
        episodes = [run_episode(p, pol, env, None)]
    elif mode == "sample":
        rng = np.random.default_rng(seed)
        episodes = [run_episode(p, pol, env, rng) for _ in range(samples)]
    else:
        raise ValueError(f"unknown policy mode {mode!r}")
    pick = (lambda e: e.best_state) if guard else (lambda e: e.final_state)
    best = min((pick(e) for e in episodes), key=lambda st: st.last_cost)
    trace = [t for t in best.trace if t.rule != "END"]
    return SearchResult(best.program, trace, best.initial_cost, best.last_cost)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    lr: float = 1e-4
    gamma: float = 0.99
    episodes: int = 2000
    n_envs: int = 8
    baseline_decay: float = 0.9
    entropy: float = 0.01
    seed: int = 0
    normalize_advantages: bool = True
    mode: str = "reinforce"          # or "ppo"
    clip: float = 0.2
    ppo_epochs: int = 4
    checkpoint_every: int = 0        # in batches; 0 disables snapshots

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.lr < 0:
            raise ValueError("learning rate must be >= 0")
        if self.mode not in ("reinforce", "ppo"):
            raise ValueError(f"unknown training mode {self.mode!r}")


@dataclass
class TrainLog:
    terminal_rewards: list[float] = field(default_factory=list)
    checkpoints: list[Policy] = field(default_factory=list)


def discounted_returns(rewards: list[float], gamma: float) -> np.ndarray:
    out = np.zeros(len(rewards))
    g = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        g = rewards[t] + gamma * g
        out[t] = g
    return out


def _step_logp(pol: Policy, rec: StepRecord) -> tuple[float, np.ndarray, np.ndarray | None]:
    p = pol.rule_probs(rec.f, rec.counts)
    lp = math.log(p[rec.rule])
    q = None
    if rec.rows is not None:
        q = pol.site_probs(rec.rule, rec.rows)
        lp += math.log(q[rec.site])
    return lp, p, q


def surrogate(pol: Policy, batch: list[tuple[StepRecord, float]], entropy: float) -> float:
    """Sum over steps of A * log pi(action) + entropy * H(rule head)."""
    total = 0.0
    for rec, adv in batch:
        lp, p, _ = _step_logp(pol, rec)
        nz = p[p > 0]
        total += adv * lp - entropy * float(np.sum(nz * np.log(nz)))
    return total


def surrogate_grad(pol: Policy, batch: list[tuple[StepRecord, float]],
                   entropy: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`surrogate` w.r.t. (W, theta)."""
    gW = np.zeros_like(pol.W)
    gT = np.zeros_like(pol.theta)
    for rec, adv in batch:
        x = pol.normalize(rec.f)
        _, p, q = _step_logp(pol, rec)
        dz = -adv * p
        dz[rec.rule] += adv
        if entropy:
            legal = p > 0
            logp = np.zeros_like(p)
            logp[legal] = np.log(p[legal])
            H = -float(np.sum(p[legal] * logp[legal]))
            dz += entropy * np.where(legal, -p * (logp + H), 0.0)
        gW += np.outer(x, dz)
        if q is not None:
            d = adv * (rec.rows[rec.site] - q @ rec.rows)
            gT[0] += d
            gT[1 + rec.rule] += d
    return gW, gT


def _ppo_grad(pol: Policy, batch: list[tuple[StepRecord, float]], clip: float,
              entropy: float) -> tuple[np.ndarray, np.ndarray]:
    gW = np.zeros_like(pol.W)
    gT = np.zeros_like(pol.theta)
    for rec, adv in batch:
        lp, _, _ = _step_logp(pol, rec)
        ratio = math.exp(lp - rec.logp)
        if (adv > 0 and ratio > 1 + clip) or (adv < 0 and ratio < 1 - clip):
            w = 0.0
        else:
            w = ratio
        a, b = surrogate_grad(pol, [(rec, adv * w)], entropy)
        gW += a
        gT += b
    return gW, gT


class Adam:
    def __init__(self, shapes, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def ascend(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mh = self.m[i] / (1 - self.b1 ** self.t)
            vh = self.v[i] / (1 - self.b2 ** self.t)
            p += self.lr * mh / (np.sqrt(vh) + self.eps)


def train(corpus: list[Program], cfg: TrainConfig = TrainConfig(),
          env_cfg: EnvConfig = EnvConfig(), policy: Policy | None = None,
          trainlog: TrainLog | None = None, cat: Catalog | None = None) -> Policy:
    """REINFORCE with a moving-average baseline (or PPO-clip) over ``corpus``."""
    if not corpus:
        raise EmptyCorpus("training corpus is empty")
    env = Env(env_cfg, cat)
    pol = (policy or Policy.uniform(env.catalog)).copy()
    _check(pol, env)
    trainlog = trainlog if trainlog is not None else TrainLog()
    rng = np.random.default_rng(cfg.seed)
    opt = Adam([pol.W.shape, pol.theta.shape], cfg.lr)
    baseline = None
    done_eps = 0
    batch_no = 0
    while done_eps < cfg.episodes:
        n = min(cfg.n_envs, cfg.episodes - done_eps)
        episodes = [run_episode(corpus[int(rng.integers(len(corpus)))], pol, env, rng)
                    for _ in range(n)]
        done_eps += n
        batch_no += 1
        pairs: list[tuple[StepRecord, float]] = []
        rets = []
        for ep in episodes:
            trainlog.terminal_rewards.append(ep.terminal_reward)
            g = discounted_returns(ep.rewards, cfg.gamma)
            rets.append(g)
            pairs.extend(zip(ep.steps, g))
        all_g = np.concatenate(rets)
        mean_g = float(all_g.mean())
        baseline = mean_g if baseline is None else \
            cfg.baseline_decay * baseline + (1 - cfg.baseline_decay) * mean_g
        adv = all_g - baseline
        if cfg.normalize_advantages and len(adv) > 1:
            adv = adv / (adv.std() + 1e-8)
        batch = [(rec, float(a)) for (rec, _), a in zip(pairs, adv)]
        scale = 1.0 / len(episodes)
        if cfg.mode == "reinforce":
            gW, gT = surrogate_grad(pol, batch, cfg.entropy)
            opt.ascend([pol.W, pol.theta], [gW * scale, gT * scale])
        else:
            for _ in range(cfg.ppo_epochs):
                gW, gT = _ppo_grad(pol, batch, cfg.clip, cfg.entropy)
                opt.ascend([pol.W, pol.theta], [gW * scale, gT * scale])
        if cfg.checkpoint_every and batch_no % cfg.checkpoint_every == 0:
            trainlog.checkpoints.append(pol.copy())
        if batch_no % 50 == 0:
            recent = trainlog.terminal_rewards[-100:]
            log.info("episode %d: mean terminal reward (last %d) %.3f", done_eps, len(recent),
                     sum(recent) / len(recent))
    return pol


__all__ = ["Policy", "TrainConfig", "TrainLog", "EmptyCorpus", "Episode", "StepRecord",
           "SITE_CAP", "state_features", "site_features", "sample_episode", "run_episode",
           "policy_optimize", "train", "surrogate", "surrogate_grad", "discounted_returns"]
