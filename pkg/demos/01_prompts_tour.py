"""Tour of the prompt templates: every task rendered from one pun entry."""

from punprobe.corpus import PunEntry, PunPair
from punprobe.prompts import (
    render_generation,
    render_nonpun,
    render_pairwise,
    render_recognition,
    render_synonym,
    template_version,
)

pair = PunPair("peace", "piece", "freedom from disputes", "separate part of a whole")
entry = PunEntry(
    id="demo_het_1",
    text="Life is a puzzle, look here for the missing peace.",
    label="pun",
    pun_type="het",
    pair=pair,
    explanation="The sentence sets up a puzzle context where 'piece' is expected, "
                "then lands on 'peace' instead.",
    keywords=("life", "puzzle"),
)
non_pun = PunEntry(id="demo_non_1", text="A man's home is his castle.",
                   label="non-pun", pun_type="none")
demos = (entry, non_pun) * 3  # 3 puns + 3 non-puns for the enhanced variant

print(f"template version: {template_version()}\n")

print("=== recognition, basic prompt, pun bias, direct answer ===")
print(render_recognition(entry, "pun", "basic", cot=False).rendered)

print("\n=== recognition, enhanced prompt, non-pun bias, chain of thought ===")
print(render_recognition(entry, "non-pun", "enhanced", cot=True,
                         demonstrations=demos).rendered[:600], "...")

print("\n=== constrained generation ===")
print(render_generation(pair, keywords=list(entry.keywords)).rendered[-260:])

print("\n=== non-pun baseline ===")
print(render_nonpun("thick", "having a short and solid form or stature").rendered)

print("\n=== pairwise judging (human explanation shown first) ===")
spec = render_pairwise(entry.text, pair,
                       human_explanation=entry.explanation,
                       model_explanation="It swaps piece for peace.",
                       order="human-first")
print(spec.rendered[-400:])

print("\n=== synonym acquisition is hom-only ===")
hom = PunEntry(id="demo_hom_1", text="Driving on so many turnpikes was taking its toll.",
               label="pun", pun_type="hom",
               pair=PunPair("toll", "toll", "a fee levied for the use of roads",
                            "value measured by what must be undergone"))
print(render_synonym(hom).rendered[-220:])
