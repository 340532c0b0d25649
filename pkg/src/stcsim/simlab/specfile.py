"""Flat key=value experiment spec files.

Grammar: one `key = value` per line, `#` comments, blank lines ignored.
Lists are comma separated; SNR grids also accept `start:stop:step`
(inclusive endpoints). Unknown keys are a ParseError with the line number;
structurally valid but semantically wrong specs raise ConfigError.
The full key reference lives in docs/spec-format.md.
"""

from dataclasses import dataclass, replace

from ..constellations import make_constellation
from ..errors import ConfigError, ParseError
from ..stcodes import make_scheme

KINDS = ("ERGODIC_RATES", "RATIO", "ABS_LOSS", "COND_PDF", "BER")
DETECTORS = ("ml", "zf", "lr_zf")

_KEYS = ("kind", "scheme", "constellation", "detector", "n_t", "n_r",
         "snr_db", "trials", "seed", "delta", "out")

_SEARCH_LIMIT = 2**20


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    n_t: tuple
    n_r: tuple
    snr_db: tuple
    trials: int
    seed: int = 0
    schemes: tuple = ("stacked_ostbc",)
    constellations: tuple = ()
    detectors: tuple = ()
    delta: float = 0.75
    out: str = ""


def _parse_int_list(text, lineno):
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ParseError(f"expected integer list, got {text!r}", lineno) from exc


def _parse_snr(text, lineno):
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("bad range")
            vals = []
            v = start
            while v <= stop + 1e-9:
                vals.append(round(v, 10))
                v += step
            return tuple(vals)
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise ParseError(f"expected SNR list or start:stop:step, got {text!r}", lineno) from exc


def parse_spec_text(text):
    """Parse spec text into an ExperimentSpec (ParseError on syntax problems)."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in fields:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ParseError(f"empty value for {key!r}", lineno)
        fields[key] = (value, lineno)

    def take(key, default=None):
        return fields.pop(key, (default, 0))

    kind, _ = take("kind")
    if kind is None:
        raise ParseError("missing required key 'kind'", 1)
    kind = kind.upper()

    n_t_text, ln = take("n_t")
    n_t = _parse_int_list(n_t_text, ln) if n_t_text else ()
    n_r_text, ln = take("n_r")
    n_r = _parse_int_list(n_r_text, ln) if n_r_text else ()
    snr_text, ln = take("snr_db")
    snr = _parse_snr(snr_text, ln) if snr_text else ()

    trials_text, ln = take("trials")
    if trials_text is None:
        raise ParseError("missing required key 'trials'", 1)
    try:
        trials = int(trials_text)
    except ValueError as exc:
        raise ParseError(f"trials must be an integer, got {trials_text!r}", ln) from exc

    seed_text, ln = take("seed", "0")
    try:
        seed = int(seed_text)
    except ValueError as exc:
        raise ParseError(f"seed must be an integer, got {seed_text!r}", ln) from exc

    delta_text, ln = take("delta", "0.75")
    try:
        delta = float(delta_text)
    except ValueError as exc:
        raise ParseError(f"delta must be a float, got {delta_text!r}", ln) from exc

    schemes_text, _ = take("scheme")
    schemes = tuple(s.strip().lower() for s in schemes_text.split(",")) if schemes_text \
        else ("stacked_ostbc",)
    const_text, _ = take("constellation")
    consts = tuple(c.strip().lower() for c in const_text.split(",")) if const_text else ()
    det_text, _ = take("detector")
    dets = tuple(d.strip().lower() for d in det_text.split(",")) if det_text else ()

    out, _ = take("out", "")

    spec = ExperimentSpec(kind=kind, n_t=n_t, n_r=n_r, snr_db=snr, trials=trials,
                          seed=seed, schemes=schemes, constellations=consts,
                          detectors=dets, delta=delta, out=out)
    validate_spec(spec)
    return spec


def load_spec(path):
    with open(path) as fh:
        return parse_spec_text(fh.read())


def emit_spec(spec, path):
    """Write a spec back out in canonical form; load_spec round-trips it."""
    lines = [f"kind = {spec.kind}"]
    lines.append("scheme = " + ",".join(spec.schemes))
    if spec.constellations:
        lines.append("constellation = " + ",".join(spec.constellations))
    if spec.detectors:
        lines.append("detector = " + ",".join(spec.detectors))
    lines.append("n_t = " + ",".join(str(v) for v in spec.n_t))
    lines.append("n_r = " + ",".join(str(v) for v in spec.n_r))
    lines.append("snr_db = " + ",".join(repr(float(v)) for v in spec.snr_db))
    lines.append(f"trials = {spec.trials}")
    lines.append(f"seed = {spec.seed}")
    lines.append(f"delta = {spec.delta!r}")
    if spec.out:
        lines.append(f"out = {spec.out}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def bits_per_channel_use(scheme_kind, const_name, n_t):
    scheme = make_scheme(scheme_kind, n_t)
    const = make_constellation(const_name)
    return scheme.rate * const.bits_per_symbol


def validate_spec(spec):
    """Semantic validation shared by the parser and run_experiment."""
    if spec.kind not in KINDS:
        raise ConfigError(f"unknown kind {spec.kind!r}; expected one of {KINDS}")
    if spec.trials < 100:
        raise ConfigError(f"trials must be >= 100, got {spec.trials}")
    if spec.seed < 0:
        raise ConfigError("seed must be >= 0")
    if not spec.n_t or not spec.n_r:
        raise ConfigError("n_t and n_r are required")
    if any(v < 1 for v in spec.n_t) or any(v < 1 for v in spec.n_r):
        raise ConfigError("antenna counts must be >= 1")
    if not (0.25 < spec.delta <= 1.0):
        raise ConfigError(f"delta must be in (1/4, 1], got {spec.delta}")

    if spec.kind in ("ERGODIC_RATES", "RATIO", "ABS_LOSS"):
        if not spec.snr_db:
            raise ConfigError(f"{spec.kind} needs an snr_db grid")
        if any(b <= a for a, b in zip(spec.snr_db, spec.snr_db[1:])):
            raise ConfigError("snr_db grid must be strictly ascending")
        for n_t in spec.n_t:
            if n_t % 2 != 0:
                raise ConfigError(f"stacked-code rate curves need even n_t, got {n_t}")
        return

    if len(spec.n_t) != 1 or len(spec.n_r) != 1:
        raise ConfigError(f"{spec.kind} takes a single n_t and n_r")
    n_t, n_r = spec.n_t[0], spec.n_r[0]
    for kind in spec.schemes:
        try:
            make_scheme(kind, n_t)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc

    if spec.kind == "COND_PDF":
        for kind in spec.schemes:
            if kind == "sm" and n_r < n_t:
                raise ConfigError("sm real model needs n_r >= n_t")
            if kind in ("stacked_ostbc", "alamouti") and 2 * n_r < n_t:
                raise ConfigError("stacked real model needs 2 n_r >= n_t")
        return

    # BER
    if not spec.snr_db:
        raise ConfigError("BER needs an snr_db grid")
    if not spec.detectors:
        raise ConfigError("BER needs a detector list")
    for det in spec.detectors:
        if det not in DETECTORS:
            raise ConfigError(f"unknown detector {det!r}; expected subset of {DETECTORS}")
    consts = spec.constellations
    if not consts:
        raise ConfigError("BER needs a constellation per scheme")
    if len(consts) == 1:
        consts = consts * len(spec.schemes)
    if len(consts) != len(spec.schemes):
        raise ConfigError(
            f"{len(spec.schemes)} schemes but {len(spec.constellations)} constellations"
        )
    for c in consts:
        make_constellation(c)  # raises DomainError -> surfaced below if unknown
    rates = [bits_per_channel_use(s, c, n_t) for s, c in zip(spec.schemes, consts)]
    if len(set(round(r, 9) for r in rates)) > 1:
        pairs = ", ".join(f"{s}+{c}: {r:g} bit/cu"
                          for s, c, r in zip(spec.schemes, consts, rates))
        raise ConfigError(f"schemes are not rate matched ({pairs})")
    for s, c in zip(spec.schemes, consts):
        const = make_constellation(c)
        scheme = make_scheme(s, n_t)
        if "ml" in spec.detectors:
            if const.order ** scheme.symbols_per_block > _SEARCH_LIMIT:
                raise ConfigError(
                    f"ml search space for {s}+{c} exceeds {_SEARCH_LIMIT} candidates"
                )
        if s == "sm" and {"zf", "lr_zf"} & set(spec.detectors) and n_r < n_t:
            raise ConfigError("sm with zero-forcing detectors needs n_r >= n_t")
        if s in ("stacked_ostbc", "alamouti") and 2 * n_r < n_t:
            raise ConfigError("stacked detection needs 2 n_r >= n_t")


def normalized_constellations(spec):
    consts = spec.constellations
    if len(consts) == 1 and len(spec.schemes) > 1:
        consts = consts * len(spec.schemes)
    return consts
