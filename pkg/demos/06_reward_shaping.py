"""Shape trace-level rewards for grouped policy optimization.

A trace must arrive as one think block followed by one answer block.
Both blocks are judged on the five-level grid, blended 0.8/0.2 in favor
of the answer, and a malformed trace pays a flat -1 instead of being
judged at all.  Within a sampling group the rewards are normalized to
advantages.
"""

from fractions import Fraction

from vidbench.backends import BackendProfile, MockBackend
from vidbench.judging import GRID
from vidbench.rewards import (
    GroupRollout,
    RewardConfig,
    granular_reward,
    group_advantages,
    score_group,
    trace_reward,
    validate_format,
)

# The format gate is a value, not an exception.
good = validate_format("<think>price is spoken at 0:01</think><answer>Twenty dollars</answer>")
bad = validate_format("<answer>Twenty dollars</answer>")
print("well-formed:", good.well_formed, "-> think:", repr(good.think))
print("malformed:  ", bad.well_formed, "-> penalty:", bad.fmt_penalty)

# The granular ladder G(x) averages the three headline projections, so
# partial credit grows in uneven steps: the largest jump sits between
# 0.75 and 1.0, where the strict metric finally switches on.
print("\nx      G(x)       as a fraction")
for x in GRID:
    g = granular_reward(x)
    print(f"{x:4.2f}  {g:8.6f}   {Fraction(g).limit_denominator(12)}")

# Composition: only a perfect, well-formed trace earns the full point,
# and a perfect but malformed one nets exactly zero.
print("\nR(1.00, 1.00, well-formed) =", trace_reward(1.0, 1.0, good))
print("R(1.00, 1.00, malformed)   =", trace_reward(1.0, 1.0, bad))
print("R(0.50, 0.75, well-formed) =", trace_reward(0.5, 0.75, good))

# Group normalization. A spread group centers near zero with unit-ish
# scale; a constant group short-circuits to exact zeros.
cfg = RewardConfig()
spread = group_advantages([1.0, 0.25, 0.25, -1.0], cfg)
print("\nadvantages, mixed group:   ", [round(a, 4) for a in spread])
print("advantages, constant group:", group_advantages([0.4, 0.4, 0.4], cfg))

# End to end: three sampled traces for one prompt, two of them parseable.
# The judge is consulted twice per well-formed trace (answer, then think)
# and never for the malformed one.
rollout = GroupRollout(
    prompt_id="blender-price",
    traces=(
        "<think>narrator quotes the price</think><answer>Twenty dollars</answer>",
        "<think>guessing from the logo</think><answer>Fifty dollars</answer>",
        "<answer>Twenty dollars</answer>",
    ),
    question="What does the narrator say the blender costs?",
    ground_truth="Twenty dollars",
)
judge = MockBackend.from_replies(
    ["score: 1.0", "score: 0.75", "score: 0.0", "score: 0.25"],
    name="judge",
)
scored = score_group(rollout, judge, BackendProfile("judge", "mock:reward", 10.0, 0))
print("\ntrace  x_a    x_t    R        A")
for i in range(len(scored.traces)):
    print(f"{i}      {scored.x_a[i]:<5}  {scored.x_t[i]:<5}  "
          f"{scored.rewards[i]:<7.4f}  {scored.advantages[i]:+.4f}")
