"""Robot motion, attack scheduling and received-trace synthesis.

The observing robot sits at a fixed receiver position with K tags mounted
around it. Every other physical robot follows a random-waypoint path; each
slot, every claimed identity transmits once and the receiver records the
signal-strength trace of that transmission, including the tags' reflections.

Random streams are keyed by purpose and index so a slot (or a single event)
can be regenerated in isolation:

    trajectories      [seed, 0]            starts
                      [seed, 0, robot]     waypoints of one robot
    schedule          [seed, 1, slot]
    synthesis         [seed, 2, slot, id]
"""
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .exceptions import ConfigurationError, SingularityError
from .sigproc import BitTemplate, make_template

ATTACK_MODES = ("basic", "power_scaling", "colluding")
SIGNAL_DOMAINS = ("power", "amplitude")
MIN_PATH = 0.01  # m; closer than this is treated as coincident

_TRAJ, _SCHED, _SYNTH = 0, 1, 2


# (noise_sigma, multipath_sigma) per named level
NOISE_LEVELS = {
    "none": (0.0, 0.0),
    "low": (2e-5, 0.02),
    "moderate": (5e-5, 0.06),
    "high": (2e-4, 0.12),
}
TAG_RING_RADIUS = 0.4


def ring_offsets(num_tags, radius=TAG_RING_RADIUS):
    """Tags evenly spaced on a circle around the receiver antenna."""
    return tuple(
        (round(radius * math.cos(2 * math.pi * k / num_tags), 12),
         round(radius * math.sin(2 * math.pi * k / num_tags), 12))
        for k in range(num_tags)
    )


@dataclass(frozen=True)
class ScenarioConfig:
    arena_width: float = 4.5
    arena_height: float = 5.5
    num_legit: int = 2
    num_attackers: int = 2
    num_fake_ids: int = 4
    attack_mode: str = "basic"
    robot_speed: float = 0.2
    slot_interval: float = 0.6
    num_slots: int = 100
    num_tags: int = 4
    tag_offsets: tuple = None
    tag_gain: float = 0.008
    noise_sigma: float = NOISE_LEVELS["moderate"][0]
    power_scale_set: tuple = (0.3, 0.6, 0.9)
    rng_seed: int = 0
    # knobs without a counterpart in the original field list
    samples_per_bit: int = 50
    bits_per_tag: int = 16
    direct_gain: float = 1.0
    multipath_sigma: float = NOISE_LEVELS["moderate"][1]
    receiver_position: tuple = None
    signal_domain: str = "power"
    min_clearance: float = 0.3
    min_separation: float = 0.3

    def __post_init__(self):
        if self.tag_offsets is None:
            object.__setattr__(self, "tag_offsets", ring_offsets(self.num_tags))
        else:
            object.__setattr__(self, "tag_offsets", tuple(tuple(float(c) for c in o) for o in self.tag_offsets))
        if self.receiver_position is None:
            object.__setattr__(self, "receiver_position", (self.arena_width / 2, self.arena_height / 2))
        else:
            object.__setattr__(self, "receiver_position", tuple(float(c) for c in self.receiver_position))
        object.__setattr__(self, "power_scale_set", tuple(float(p) for p in self.power_scale_set))

    @property
    def num_ids(self):
        return self.num_legit + self.num_fake_ids

    @property
    def num_robots(self):
        return self.num_legit + self.num_attackers

    @property
    def ids(self):
        return [f"legit-{i}" for i in range(self.num_legit)] + [f"fake-{j}" for j in range(self.num_fake_ids)]

    def is_fake(self, claimed_id):
        return claimed_id.startswith("fake-")

    @property
    def ids_per_attacker(self):
        return self.num_fake_ids // self.num_attackers if self.num_attackers else 0

    def template(self):
        return make_template(self.num_tags, self.bits_per_tag, self.samples_per_bit)

    def tag_positions(self):
        return np.asarray(self.receiver_position) + np.asarray(self.tag_offsets, dtype=float).reshape(-1, 2)

    def validate(self):
        p = []
        if self.arena_width <= 0 or self.arena_height <= 0:
            p.append(("arena_width/arena_height", "must be > 0"))
        if self.attack_mode not in ATTACK_MODES:
            p.append(("attack_mode", f"must be one of {ATTACK_MODES}, got {self.attack_mode!r}"))
        if self.num_legit < 0:
            p.append(("num_legit", "must be >= 0"))
        if self.num_attackers < 0 or self.num_fake_ids < 0:
            p.append(("num_attackers/num_fake_ids", "must be >= 0"))
        if (self.num_attackers == 0) != (self.num_fake_ids == 0):
            p.append(("num_fake_ids", "attackers and fake IDs must both be zero or both positive"))
        if self.attack_mode == "colluding" and self.num_attackers < 1:
            p.append(("num_attackers", "colluding mode needs at least one attacker"))
        if self.num_attackers > 0:
            if self.num_fake_ids < self.num_attackers:
                p.append(("num_fake_ids", "must be >= num_attackers"))
            elif self.num_fake_ids % self.num_attackers:
                p.append(("num_fake_ids", f"must be divisible by num_attackers ({self.num_attackers})"))
        if self.num_ids < 1:
            p.append(("num_legit", "scenario has no identities"))
        if self.robot_speed < 0:
            p.append(("robot_speed", "must be >= 0"))
        if self.slot_interval <= 0:
            p.append(("slot_interval", "must be > 0"))
        if self.num_slots < 1:
            p.append(("num_slots", "must be >= 1"))
        if self.num_tags < 1:
            p.append(("num_tags", "must be >= 1"))
        offsets = np.asarray(self.tag_offsets, dtype=float)
        if offsets.shape != (self.num_tags, 2):
            p.append(("tag_offsets", f"need exactly num_tags={self.num_tags} 2-D offsets"))
        else:
            if len({tuple(o) for o in offsets.tolist()}) != self.num_tags:
                p.append(("tag_offsets", "offsets must be pairwise distinct"))
            if (np.hypot(offsets[:, 0], offsets[:, 1]) < MIN_PATH).any():
                p.append(("tag_offsets", "tags must not coincide with the receiver"))
        if self.tag_gain <= 0:
            p.append(("tag_gain", "must be > 0"))
        if self.noise_sigma < 0:
            p.append(("noise_sigma", "must be >= 0"))
        if not self.power_scale_set or min(self.power_scale_set) <= 0:
            p.append(("power_scale_set", "must be nonempty with all entries > 0"))
        if self.samples_per_bit < 1:
            p.append(("samples_per_bit", "must be >= 1"))
        if self.bits_per_tag < 3:
            p.append(("bits_per_tag", "must be >= 3"))
        if self.direct_gain <= 0:
            p.append(("direct_gain", "must be > 0"))
        if self.multipath_sigma < 0:
            p.append(("multipath_sigma", "must be >= 0"))
        if self.signal_domain not in SIGNAL_DOMAINS:
            p.append(("signal_domain", f"must be one of {SIGNAL_DOMAINS}"))
        rx, ry = self.receiver_position
        if not (0 <= rx <= self.arena_width and 0 <= ry <= self.arena_height):
            p.append(("receiver_position", "must lie inside the arena"))
        if p:
            raise ConfigurationError(p)
        return self

    def to_dict(self):
        d = asdict(self)
        d["tag_offsets"] = [list(o) for o in self.tag_offsets]
        d["power_scale_set"] = list(self.power_scale_set)
        d["receiver_position"] = list(self.receiver_position)
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError([(k, "unknown field") for k in unknown])
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh)).validate()

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def with_noise(self, level):
        """Copy with the named ``NOISE_LEVELS`` entry applied."""
        if level not in NOISE_LEVELS:
            raise ConfigurationError([("noise", f"unknown level {level!r}; choose from {list(NOISE_LEVELS)}")])
        sigma, mp = NOISE_LEVELS[level]
        return replace(self, noise_sigma=sigma, multipath_sigma=mp)

    def with_(self, **changes):
        if "num_tags" in changes and "tag_offsets" not in changes:
            changes["tag_offsets"] = None
        if ({"arena_width", "arena_height"} & set(changes)) and "receiver_position" not in changes:
            changes["receiver_position"] = None
        return replace(self, **changes)


def preset(name, **overrides):
    """Named arenas: ``office`` (4.5 m x 5.5 m) and ``rooftop`` (8 m x 10 m)."""
    arenas = {"office": (4.5, 5.5), "rooftop": (8.0, 10.0)}
    if name not in arenas:
        raise ConfigurationError([("preset", f"unknown preset {name!r}; choose from {sorted(arenas)}")])
    w, h = arenas[name]
    return ScenarioConfig(arena_width=w, arena_height=h, **overrides).validate()


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray  # (num_slots, 2)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class TransmissionEvent:
    slot: int
    claimed_id: str
    emitter: int
    transmit_power: float = 1.0


@dataclass(frozen=True)
class SampleTrace:
    samples: np.ndarray
    ground_truth_start: int
    reflection_levels: np.ndarray = field(default=None, compare=False)
    direct_level: float = field(default=None, compare=False)

    def __len__(self):
        return len(self.samples)


def _segment_clearance(a, b, c):
    """Distance from point c to segment ab."""
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(1.0, max(0.0, float((c - a) @ ab) / denom))
    return float(np.hypot(*(a + t * ab - c)))


def _obstacles(config):
    """Receiver and tag positions robots must keep ``min_clearance`` from."""
    return np.vstack([np.asarray(config.receiver_position)[None, :], config.tag_positions()])


def _draw_start_positions(config):
    rng = np.random.default_rng([config.rng_seed, _TRAJ])
    obstacles = _obstacles(config)
    starts = []
    for _ in range(config.num_robots):
        for _attempt in range(2000):
            p = rng.uniform((0.0, 0.0), (config.arena_width, config.arena_height))
            if np.hypot(*(obstacles - p).T).min() < config.min_clearance:
                continue
            if any(np.hypot(*(p - q)) < config.min_separation for q in starts):
                continue
            starts.append(p)
            break
        else:
            raise ConfigurationError([
                ("arena_width/arena_height",
                 f"arena too small to place {config.num_robots} robots with "
                 f"{config.min_separation} m separation and {config.min_clearance} m receiver clearance"),
            ])
    return starts


def _next_waypoint(rng, pos, config, obstacles):
    for _ in range(200):
        wp = rng.uniform((0.0, 0.0), (config.arena_width, config.arena_height))
        if min(_segment_clearance(pos, wp, c) for c in obstacles) >= config.min_clearance:
            return wp
    return pos.copy()


def generate_trajectories(config):
    """Random-waypoint paths, one per physical robot (legit robots first).

    A robot heads for a uniformly drawn waypoint at ``robot_speed``, draws a
    new one on arrival, and never passes within ``min_clearance`` of the
    receiver or a tag. Positions are sampled once per slot.
    """
    config.validate()
    rx = _obstacles(config)
    step = config.robot_speed * config.slot_interval
    out = []
    for r, start in enumerate(_draw_start_positions(config)):
        rng = np.random.default_rng([config.rng_seed, _TRAJ, r])
        pos = start.copy()
        wp = _next_waypoint(rng, pos, config, rx)
        path = [pos.copy()]
        for _ in range(config.num_slots - 1):
            remaining = step
            while remaining > 0:
                gap = float(np.hypot(*(wp - pos)))
                if gap == 0.0:
                    wp = _next_waypoint(rng, pos, config, rx)
                    if np.array_equal(wp, pos):
                        break
                    continue
                if gap <= remaining:
                    pos = wp.copy()
                    remaining -= gap
                    wp = _next_waypoint(rng, pos, config, rx)
                    if np.array_equal(wp, pos):
                        break
                else:
                    pos = pos + (wp - pos) * (remaining / gap)
                    remaining = 0.0
            path.append(pos.copy())
        out.append(Trajectory(np.array(path)))
    return out


def fake_id_owner_static(config):
    """Static even split of fake IDs over attackers: {fake id: attacker index}."""
    m = config.ids_per_attacker
    return {f"fake-{j}": j // m for j in range(config.num_fake_ids)} if m else {}


def schedule_rng(config, slot):
    return np.random.default_rng([config.rng_seed, _SCHED, slot])


def schedule_transmissions(config, slot, rng=None):
    """One event per claimed ID for ``slot``.

    Emitter indices address ``generate_trajectories`` output: legit robot i is
    emitter i, attacker a is emitter ``num_legit + a``.
    """
    if not 0 <= slot < config.num_slots:
        raise ValueError(f"slot {slot} outside [0, {config.num_slots})")
    if rng is None:
        rng = schedule_rng(config, slot)
    events = [TransmissionEvent(slot, f"legit-{i}", i, 1.0) for i in range(config.num_legit)]
    if not config.num_fake_ids:
        return events
    fake_ids = [f"fake-{j}" for j in range(config.num_fake_ids)]
    if config.attack_mode == "colluding":
        m = config.ids_per_attacker
        order = rng.permutation(config.num_fake_ids)
        owner = {fake_ids[j]: pos // m for pos, j in enumerate(order)}
    else:
        owner = fake_id_owner_static(config)
    for fid in fake_ids:
        power = 1.0
        if config.attack_mode == "power_scaling":
            power = float(config.power_scale_set[rng.integers(len(config.power_scale_set))])
        events.append(TransmissionEvent(slot, fid, config.num_legit + owner[fid], power))
    return events


def reflected_power(emitter_pos, transmit_power, config):
    """Friis power reflected by each tag towards the receiver.

    P_k = transmit_power * tag_gain / (d_kt^2 * d_kr^2), with d_kt the
    emitter-to-tag and d_kr the tag-to-receiver distance.
    """
    tags = config.tag_positions()
    d_kt = np.hypot(*(tags - np.asarray(emitter_pos, dtype=float)).T)
    if (d_kt < MIN_PATH).any():
        k = int(np.argmin(d_kt))
        raise SingularityError(f"emitter at {tuple(emitter_pos)} coincides with tag {k}")
    offsets = np.asarray(config.tag_offsets, dtype=float).reshape(-1, 2)
    d_kr = np.hypot(offsets[:, 0], offsets[:, 1])
    return transmit_power * config.tag_gain / (d_kt ** 2 * d_kr ** 2)


def direct_power(emitter_pos, transmit_power, config):
    d = float(np.hypot(*(np.asarray(emitter_pos, dtype=float) - np.asarray(config.receiver_position))))
    if d < MIN_PATH:
        raise SingularityError(f"emitter at {tuple(emitter_pos)} coincides with the receiver")
    return transmit_power * config.direct_gain / d ** 2


def reflection_levels(emitter_pos, transmit_power, config):
    """Per-tag trace level: reflected power, or its square root in the
    ``amplitude`` domain."""
    p = reflected_power(emitter_pos, transmit_power, config)
    return p if config.signal_domain == "power" else np.sqrt(p)


def direct_level(emitter_pos, transmit_power, config):
    p = direct_power(emitter_pos, transmit_power, config)
    return p if config.signal_domain == "power" else math.sqrt(p)


def synthesis_rng(config, slot, id_index):
    return np.random.default_rng([config.rng_seed, _SYNTH, slot, id_index])


def synthesize_received_signal(event, emitter_pos, config, rng, template=None):
    """Received trace for one transmission.

    Layout: random lead-in padding, then K tag blocks (tag k reflects only
    during its own block, following its bit pattern), then random trailing
    padding. Every sample carries the direct-path level; additive white
    Gaussian noise goes on top and the result is clipped at zero.
    """
    if template is None:
        template = config.template()
    amps = reflection_levels(emitter_pos, event.transmit_power, config)
    base = direct_level(emitter_pos, event.transmit_power, config)
    spb = config.samples_per_bit
    lead = int(rng.integers(spb, 3 * spb + 1))
    trail = int(rng.integers(spb, 3 * spb + 1))
    if config.multipath_sigma > 0:
        amps = amps * np.maximum(0.0, 1.0 + config.multipath_sigma * rng.standard_normal(len(amps)))
    reflect = (template.tag_masks() * amps[:, None]).reshape(-1)
    samples = np.full(lead + template.length + trail, base)
    samples[lead:lead + template.length] += reflect
    if config.noise_sigma > 0:
        samples += rng.normal(0.0, config.noise_sigma, size=len(samples))
        np.maximum(samples, 0.0, out=samples)
    samples.setflags(write=False)
    return SampleTrace(samples, lead, amps, base)


def iter_slot_traces(config, trajectories=None, template=None):
    """Yield ``(event, trace)`` for every slot and claimed ID, in slot order."""
    config.validate()
    if trajectories is None:
        trajectories = generate_trajectories(config)
    if template is None:
        template = config.template()
    index = {cid: i for i, cid in enumerate(config.ids)}
    for slot in range(config.num_slots):
        for ev in schedule_transmissions(config, slot):
            pos = trajectories[ev.emitter].positions[slot]
            rng = synthesis_rng(config, slot, index[ev.claimed_id])
            yield ev, synthesize_received_signal(ev, pos, config, rng, template)
