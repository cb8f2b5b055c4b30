"""Several memory pathways kept alive at once.

With one pathway and one candidate the tree is exactly the FIFO tracker. With
more pathways it keeps alternative hypotheses, ranked by accumulated decoder
confidence. On this video every surviving pathway ends up holding nearly the
same memory, so extra pathways do not change the result; the scores printed at
the end show how close the hypotheses are.

    python3 demos/03_tree_pathways.py
"""

from memnav.engine import SessionConfig, evaluate, run_session
from memnav.scenario import builtin_suite, generate

sc = generate(builtin_suite("crowded_distractors", seed=4))

fifo = run_session(sc, 0, SessionConfig(policy="fifo"))
tree1 = run_session(sc, 0, SessionConfig(policy="tree", pathways=1, k=1))
print("Tree(P=1, k=1) reproduces FIFO mask for mask:", fifo.masks() == tree1.masks())

print("\npathways  J&F")
for P in (1, 2, 3, 4):
    rec = run_session(sc, 0, SessionConfig(policy="tree", pathways=P))
    print(f"{P:8d}  {evaluate(rec, sc).jf:.3f}")

rec = run_session(sc, 0, SessionConfig(policy="tree", pathways=3))
print("\nLast frames of the P=3 run (selected pathway, memory frames, pathway scores):")
for fr in rec.frames[-3:]:
    d = fr.digest
    scores = ", ".join(f"{s:.2f}" for s in d["pathway_scores"])
    print(f"  frame {fr.index}: pathway {d['selected']}, memory {d['memory']}, scores [{scores}]")
