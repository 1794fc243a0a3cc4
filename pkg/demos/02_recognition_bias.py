"""Dual-biased recognition against deterministic mock backends.

The bias-follower persona models a model that simply agrees with whichever
category the prompt leans toward; the resulting deltas and kappa show how
the metrics expose that behavior.
"""

import tempfile

from punprobe.gateway import BackendConfig
from punprobe.runner import Experiment, ExperimentConfig, run_recognition

with tempfile.TemporaryDirectory() as tmp:
    for persona in ("bias-follower", "always-pun"):
        config = ExperimentConfig(
            corpus="toy",
            dataset_kind="het-dataset",
            output_dir=f"{tmp}/out-{persona}",
            subject_backend=BackendConfig.mock(persona, cache_dir=f"{tmp}/{persona}"),
            judge_backend=BackendConfig.mock("always-unsure", cache_dir=f"{tmp}/judge"),
        )
        block = run_recognition(Experiment.prepare(config))
        print(f"--- subject persona: {persona}")
        for cell in block["cells"]:
            print(f"  variant={cell['variant']:<8} cot={str(cell['cot']):<5} "
                  f"TPR={cell['tpr_pun_bias']:.2f} dTPR={cell['delta_tpr']:+.2f} "
                  f"TNR={cell['tnr_pun_bias']:.2f} dTNR={cell['delta_tnr']:+.2f} "
                  f"kappa={cell['kappa']:.2f}")
