"""Agreement statistics and the LLM-as-judge pairwise flow."""

import tempfile

from punprobe.corpus import PunEntry, PunPair
from punprobe.explanation import (
    PairwiseTask,
    fleiss_kappa,
    mention_ratios,
    pairwise_rates,
    resolve_majority,
    run_pairwise,
)
from punprobe.explanation import PunchlineAnnotation
from punprobe.gateway import BackendConfig

# punchline check: three annotators audit one explanation
annotations = [
    PunchlineAnnotation("task1", "ann-a", (True, True, True, False)),
    PunchlineAnnotation("task1", "ann-b", (True, False, True, False)),
    PunchlineAnnotation("task1", "ann-c", (True, True, False, False)),
]
resolved = resolve_majority(annotations)
print("majority flags (wp, wa, sp, sa):", resolved)
print("mention ratios over one task:   ", mention_ratios([resolved]))

matrix = [[True, True, True], [True, True, False], [False, False, False],
          [True, False, True]]
print("Fleiss kappa on a 4x3 matrix:   ", round(fleiss_kappa(matrix), 4))

# pairwise judging with a judge that never commits
pair = PunPair("peace", "piece", "freedom from disputes", "separate part of a whole")
entry = PunEntry(id="het_1", text="Life is a puzzle, look here for the missing peace.",
                 label="pun", pun_type="het", pair=pair)
tasks = [PairwiseTask(task_id=f"pair:{i}", entry=entry,
                      human_explanation="Human explanation of the wordplay.",
                      model_explanation="Model explanation of the wordplay.")
         for i in range(4)]
with tempfile.TemporaryDirectory() as tmp:
    judge = BackendConfig.mock("always-unsure", cache_dir=tmp)
    outcome = run_pairwise(tasks, judge, seed=11)
print("judge verdicts:", [(v.task_id, v.presentation_order, v.winner)
                          for v in outcome.verdicts])
print("win/tie/loss:  ", pairwise_rates(outcome.verdicts))
