"""Score grasp candidates, then find the nearest ones to the gripper with a vp-tree."""

from dqvs import dq as D
from dqvs.grasping import locomo_score, rerank, to_world
from dqvs.sim import block_grasps
from dqvs.vptree import build_vptree

cands = block_grasps()
print(f"{len(cands)} candidates on the block; the central stations score highest:")
for c in sorted(cands, key=locomo_score, reverse=True)[:4]:
    print(f"  id {c.id:2d}  score {locomo_score(c):.4f}  x offset {D.translation_of(c.grasp)[0]:+.3f}")

# Put the block somewhere and look up the pre-grasps closest to the gripper.
block = D.translation([0.5, 0.1, 0.1])
world = [to_world(c, block) for c in cands]
tree = build_vptree([w.world_pregrasp for w in world], ids=[w.id for w in world])
# hover 2 cm to the side of candidate 12's pre-grasp
gripper = D.dq_mul(D.translation([0.0, 0.02, 0.0]), world[12].world_pregrasp)
near = tree.k_nearest(gripper, 8)
ups, _ = rerank([d for _, d in near])
# Distances are divided by their spread, so near-identical twins give large values;
# only the ordering and the gaps between them matter to the switching rule.
print("eight nearest pre-grasps (id, distance, normalised):")
for (i, d), u in zip(near, ups):
    print(f"  id {i:2d}  {d:.4f}  {u:.3f}")
