"""Score the shipped fixture: human puns versus matched non-pun baselines.

Ambiguity is the entropy of the meaning posterior; distinctiveness the
symmetrized KL between the focus distributions of the two senses; surprise
the local/global surprisal ratio of the pun word against its alternative.
Human puns should dominate the baselines on all three.
"""

from punprobe import toydata
from punprobe.generation import GenerationRecord, aggregate, score_record

embeddings = toydata.build_embeddings()
ngram = toydata.build_lm()
entries = toydata.build_fixture_entries()
baselines = toydata.build_nonpun_baselines()

print(f"{len(entries)} fixture pun pairs, embedding vocab {len(embeddings)}, "
      f"LM vocab {len(ngram.vocabulary)}\n")

example = entries[0]
print("example pun:     ", example.text)
print("matched non-pun: ", baselines[example.id], "\n")

rows = {"human pun": [], "non-pun": []}
for entry in entries:
    rows["human pun"].append(score_record(GenerationRecord(
        entry_id=entry.id, sentence=entry.text, mode="free", source="human",
        pair=entry.pair, pun_type=entry.pun_type), embeddings, ngram))
    rows["non-pun"].append(score_record(GenerationRecord(
        entry_id=entry.id, sentence=baselines[entry.id], mode="free",
        source="nonpun-baseline", pair=entry.pair, pun_type=entry.pun_type),
        embeddings, ngram))

print(f"{'source':<10} {'A':>6} {'D':>7} {'S':>7} {'1wp':>5} {'U':>7}")
for name, row_list in rows.items():
    agg = aggregate(row_list)
    print(f"{name:<10} {agg.ambiguity:>6.3f} {agg.distinctiveness:>7.2f} "
          f"{agg.surprise_with_sentinels:>7.3f} {agg.one_pun_word_rate:>5.2f} "
          f"{agg.unusualness:>7.3f}")
