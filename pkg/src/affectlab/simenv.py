"""Parametric simulated marketing-dialogue user.

Stands in for human conversation partners: keeps a latent emotional/intent
state, emits noisy multimodal feature vectors each turn, reacts to the
agent's (strategy, tone, information) action, and produces the three reward
channels (immediate affect, engagement, conversion).

Every constant of the dynamics lives in ScenarioConfig and is overridable
from the run config. Emission maps and the product catalog are fixed random
matrices drawn from `emission_seed`, so two environments built from equal
configs are identical; per-episode randomness comes from the reset seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, StateError
from .seeding import STREAM_BASELINE

EMOTIONS = ("joy", "sadness", "anger", "fear", "surprise", "disgust")
N_EMOTIONS = len(EMOTIONS)

# Per-class tone target: the agent's emotion_tone is rewarded for matching
# the valence of the user's dominant emotion class.
VALENCE = np.array([1.0, -0.5, -1.0, -0.6, 0.3, -0.8])

STRATEGIES = ("logical_appeal", "emotional_appeal", "social_proof", "urgency")

# Rows: emotion class, columns: strategy. Each row has a unique maximum; the
# best strategy differs by emotional state (facts for anger, reassurance for
# fear, closing pressure for joy, ...), which is what makes strategy choice
# worth learning.
DEFAULT_COMPATIBILITY = np.array([
    # logical  emotional  social   urgency
    [0.00,     0.30,      0.20,    1.00],   # joy
    [0.00,     1.00,      0.20,   -0.60],   # sadness
    [1.00,    -0.40,      0.10,   -0.80],   # anger
    [0.20,     0.10,      1.00,   -0.60],   # fear
    [0.00,     1.00,      0.30,    0.00],   # surprise
    [1.00,    -0.10,      0.10,   -0.70],   # disgust
])

# Emotion drift: on a positive turn 15% of the probability mass moves to joy,
# on a negative turn it moves to anger/sadness in equal parts; a zero-reward
# turn leaves the distribution unchanged.
DRIFT_RATE = 0.15
DRIFT_TARGET_POSITIVE = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
DRIFT_TARGET_NEGATIVE = np.array([0.0, 0.5, 0.5, 0.0, 0.0, 0.0])


@dataclass
class UserState:
    """Latent simulated-user state; the agent never reads this directly."""

    emotion: np.ndarray          # probability vector over the 6 classes
    intent: float                # purchase readiness in [0, 1]
    engagement: float            # in [0, 1]
    hidden_need: int             # catalog slot the user implicitly wants
    turn: int = 0


@dataclass
class ObservationBundle:
    f_text: np.ndarray
    f_vision: np.ndarray
    f_audio: np.ndarray
    f_facial: np.ndarray
    f_prosodic: np.ndarray
    f_linguistic: np.ndarray
    f_query: np.ndarray
    f_behavior: np.ndarray
    f_context: np.ndarray


@dataclass
class UserFeedback:
    r_immediate: float
    r_engagement: float
    r_conversion: float
    done: bool
    converted: bool


@dataclass
class ScenarioConfig:
    # modality feature dims
    d_text: int = 12
    d_vision: int = 10
    d_audio: int = 8
    # sub-slice lengths taken from the front of text/vision/audio
    d_facial: int = 6
    d_prosodic: int = 6
    d_linguistic: int = 6
    # intent-channel feature dims (functions of intent, engagement, turn)
    d_query: int = 4
    d_behavior: int = 4
    d_context: int = 4

    catalog_size: int = 8
    catalog_dim: int = 16          # must equal the model's knowledge width d_k
    n_strategies: int = 4

    noise_std: float = 0.1
    emission_seed: int = 7

    # How strongly each modality's emission mixes in the emotion block vs the
    # need/drive blocks of the latent. Text mostly carries the need and
    # intent; emotional signal rides on vision and audio, so a text-only
    # agent faces genuinely degraded affect observability.
    text_emotion_gain: float = 0.15
    vision_emotion_gain: float = 1.0
    audio_emotion_gain: float = 1.0
    text_need_gain: float = 1.0
    vision_need_gain: float = 0.3
    audio_need_gain: float = 0.2

    # reward/dynamics constants
    kappa: float = 0.5             # tone mismatch penalty weight
    eta_immediate: float = 0.05    # intent gain per unit r_immediate
    eta_need: float = 0.15         # intent gain when the offered info matches the need
    eta_engagement: float = 0.05   # engagement gain per unit r_immediate
    engagement_decay: float = 0.02
    engagement_floor: float = 0.05

    max_turns: int = 15
    conversion_threshold: float = 0.6

    compatibility: np.ndarray = field(default_factory=lambda: DEFAULT_COMPATIBILITY.copy())

    def __post_init__(self):
        self.compatibility = np.asarray(self.compatibility, dtype=np.float64)
        if self.compatibility.shape != (N_EMOTIONS, self.n_strategies):
            raise ConfigError(
                f"compatibility must be {N_EMOTIONS}x{self.n_strategies}, "
                f"got {list(self.compatibility.shape)}")
        for i, row in enumerate(self.compatibility):
            top = row.max()
            if (row == top).sum() != 1:
                raise ConfigError(f"compatibility row {i} ({EMOTIONS[i]}) has a tied maximum")
        if not (0.0 < self.conversion_threshold < 1.0):
            raise ConfigError("conversion_threshold must be in (0, 1)")
        if self.max_turns <= 0:
            raise ConfigError("max_turns must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be nonnegative")
        if self.d_facial > self.d_vision or self.d_prosodic > self.d_audio \
                or self.d_linguistic > self.d_text:
            raise ConfigError("sub-slice dims exceed their parent modality dims")
        self._build_emission()

    def _build_emission(self):
        rng = np.random.default_rng(self.emission_seed)
        lat = self.latent_dim
        scale = 1.0 / np.sqrt(lat)

        def modality(dim, emotion_gain, need_gain):
            m = rng.normal(size=(dim, lat)) * scale
            m[:, :N_EMOTIONS] *= emotion_gain
            m[:, N_EMOTIONS + 2:] *= need_gain
            return m

        self.emit_text = modality(self.d_text, self.text_emotion_gain, self.text_need_gain)
        self.emit_vision = modality(self.d_vision, self.vision_emotion_gain, self.vision_need_gain)
        self.emit_audio = modality(self.d_audio, self.audio_emotion_gain, self.audio_need_gain)
        # intent-channel features see only [intent, engagement, turn fraction]
        self.emit_query = rng.normal(size=(self.d_query, 3)) / np.sqrt(3)
        self.emit_behavior = rng.normal(size=(self.d_behavior, 3)) / np.sqrt(3)
        self.emit_context = rng.normal(size=(self.d_context, 3)) / np.sqrt(3)
        catalog = rng.normal(size=(self.catalog_size, self.catalog_dim))
        self.catalog = catalog / np.linalg.norm(catalog, axis=1, keepdims=True)

    @property
    def latent_dim(self) -> int:
        return N_EMOTIONS + 2 + self.catalog_size

    @classmethod
    def preset(cls, name: str) -> "ScenarioConfig":
        """Named episode-length presets: convmarket (15 turns), affectpromo (22)."""
        if name == "convmarket":
            return cls(max_turns=15)
        if name == "affectpromo":
            return cls(max_turns=22)
        raise ConfigError(f"unknown scenario preset: {name}")


def _latent_vector(state: UserState, config: ScenarioConfig) -> np.ndarray:
    need = np.zeros(config.catalog_size)
    need[state.hidden_need] = 1.0
    return np.concatenate([state.emotion, [state.intent, state.engagement], need])


def emit(state: UserState, config: ScenarioConfig, rng: np.random.Generator) -> ObservationBundle:
    """Map the latent state to the per-turn multimodal observation."""
    u = _latent_vector(state, config)
    drive = np.array([state.intent, state.engagement, state.turn / config.max_turns])

    def noisy(mat, x):
        y = mat @ x
        if config.noise_std > 0:
            y = y + rng.normal(scale=config.noise_std, size=y.shape)
        return y

    f_text = noisy(config.emit_text, u)
    f_vision = noisy(config.emit_vision, u)
    f_audio = noisy(config.emit_audio, u)
    return ObservationBundle(
        f_text=f_text,
        f_vision=f_vision,
        f_audio=f_audio,
        f_facial=f_vision[:config.d_facial].copy(),
        f_prosodic=f_audio[:config.d_prosodic].copy(),
        f_linguistic=f_text[:config.d_linguistic].copy(),
        f_query=noisy(config.emit_query, drive),
        f_behavior=noisy(config.emit_behavior, drive),
        f_context=noisy(config.emit_context, drive),
    )


def drift_emotion(emotion: np.ndarray, r_immediate: float) -> np.ndarray:
    if r_immediate > 0:
        target = DRIFT_TARGET_POSITIVE
    elif r_immediate < 0:
        target = DRIFT_TARGET_NEGATIVE
    else:
        return emotion.copy()
    mixed = (1.0 - DRIFT_RATE) * emotion + DRIFT_RATE * target
    return mixed / mixed.sum()


class MarketingDialogueEnv:
    """Episodic environment; one instance handles one episode at a time."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self._state: UserState | None = None
        self._rng: np.random.Generator | None = None
        self._done = True

    def reset(self, seed: int):
        cfg = self.config
        self._rng = np.random.default_rng(seed)
        dominant = int(self._rng.integers(N_EMOTIONS))
        alpha = np.full(N_EMOTIONS, 0.5)
        alpha[dominant] = 8.0
        emotion = self._rng.dirichlet(alpha)
        self._state = UserState(
            emotion=emotion,
            intent=float(self._rng.uniform(0.1, 0.4)),
            engagement=0.8,
            hidden_need=int(self._rng.integers(cfg.catalog_size)),
            turn=0,
        )
        self._done = False
        return self._state, emit(self._state, cfg, self._rng)

    @property
    def state(self) -> UserState:
        return self._state

    def step(self, action):
        """Advance one turn; action needs .strategy, .emotion_tone, .information_content."""
        if self._done or self._state is None:
            raise StateError("step called on a finished episode; call reset first")
        cfg = self.config
        s = self._state
        strategy = int(action.strategy)
        if not (0 <= strategy < cfg.n_strategies):
            raise ValueError(f"strategy index {strategy} out of range")

        dominant = int(np.argmax(s.emotion))
        tone = float(action.emotion_tone)
        r_immediate = float(cfg.compatibility[dominant, strategy]
                            - cfg.kappa * abs(tone - VALENCE[dominant]))

        info = np.asarray(action.information_content, dtype=np.float64)
        matched_slot = int(np.argmax(cfg.catalog @ info))
        need_match = 1.0 if matched_slot == s.hidden_need else 0.0

        intent = float(np.clip(s.intent + cfg.eta_immediate * r_immediate
                               + cfg.eta_need * need_match, 0.0, 1.0))
        engagement = float(np.clip(s.engagement + cfg.eta_engagement * r_immediate
                                   - cfg.engagement_decay, 0.0, 1.0))
        emotion = drift_emotion(s.emotion, r_immediate)

        turn = s.turn + 1
        done = turn == cfg.max_turns or engagement < cfg.engagement_floor
        converted = bool(done and intent >= cfg.conversion_threshold)

        self._state = UserState(emotion=emotion, intent=intent,
                                engagement=engagement,
                                hidden_need=s.hidden_need, turn=turn)
        self._done = done
        feedback = UserFeedback(
            r_immediate=r_immediate,
            r_engagement=engagement,
            r_conversion=1.0 if converted else 0.0,
            done=done,
            converted=converted,
        )
        return self._state, emit(self._state, cfg, self._rng), feedback


# reference policies ---------------------------------------------------------

@dataclass
class SimpleAction:
    strategy: int
    emotion_tone: float
    information_content: np.ndarray


def random_action(config: ScenarioConfig, rng: np.random.Generator) -> SimpleAction:
    return SimpleAction(
        strategy=int(rng.integers(config.n_strategies)),
        emotion_tone=float(rng.uniform(-1.0, 1.0)),
        information_content=rng.normal(size=config.catalog_dim),
    )


def oracle_action(state: UserState, config: ScenarioConfig) -> SimpleAction:
    """Best response computed from the latent state (test/benchmark use only)."""
    dominant = int(np.argmax(state.emotion))
    return SimpleAction(
        strategy=int(np.argmax(config.compatibility[dominant])),
        emotion_tone=float(VALENCE[dominant]),
        information_content=config.catalog[state.hidden_need].copy(),
    )


def run_scripted_episode(config: ScenarioConfig, seed: int, policy) -> tuple[bool, int]:
    """Roll one episode with policy(state, config, rng) -> action; returns (converted, turns)."""
    env = MarketingDialogueEnv(config)
    state, _ = env.reset(seed)
    rng = np.random.default_rng((seed, 101))
    while True:
        state, _, fb = env.step(policy(state, config, rng))
        if fb.done:
            return fb.converted, state.turn


def random_policy_baseline(config: ScenarioConfig, episodes: int, seed: int) -> float:
    """Monte-Carlo conversion rate of the uniform-random policy.

    This is the pre-registered baseline trained agents are compared against.
    """
    hits = 0
    for i in range(episodes):
        converted, _ = run_scripted_episode(
            config, _episode_seed(seed, i),
            lambda s, c, rng: random_action(c, rng))
        hits += converted
    return hits / episodes


def oracle_policy_baseline(config: ScenarioConfig, episodes: int, seed: int) -> float:
    """Conversion rate of the latent-state oracle; upper reference for the env."""
    hits = 0
    for i in range(episodes):
        converted, _ = run_scripted_episode(
            config, _episode_seed(seed, i),
            lambda s, c, rng: oracle_action(s, c))
        hits += converted
    return hits / episodes


def _episode_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, STREAM_BASELINE, index]).generate_state(1)[0])
