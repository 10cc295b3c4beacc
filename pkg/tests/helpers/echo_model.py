"""Line-protocol test double. Modes: echo (first column), sumsq (x1 + x2^2),
short (drops one prediction), crash (exits 3), sleep (never answers),
nan (returns NaN for the second row), badid (wrong id)."""
import json
import sys
import time

mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
for line in sys.stdin:
    req = json.loads(line)
    rows = req["rows"]
    if mode == "crash":
        sys.stderr.write("model exploded\n")
        sys.exit(3)
    if mode == "sleep":
        time.sleep(60)
    if mode == "sumsq":
        preds = [r[0] + r[1] ** 2 for r in rows]
    else:
        preds = [r[0] for r in rows]
    if mode == "short":
        preds = preds[:-1]
    if mode == "nan" and len(preds) > 1:
        preds[1] = float("nan")
    rid = req["id"] + 1 if mode == "badid" else req["id"]
    out = json.dumps({"id": rid, "predictions": preds})
    sys.stdout.write(out + "\n")
    sys.stdout.flush()
