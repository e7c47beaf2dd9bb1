"""Start a throwaway eval service with a 20-task batch for frontend tests.

Usage: python3 serve_fixture.py PORT
Prints "READY" once the server accepts connections.
"""

import sys
import threading
import time
import urllib.request

import uvicorn

from fec.evalservice import EvalService, build_app, create_batch

port = int(sys.argv[1])

systems = {
    "system_alpha": [
        {"claim": f"claim a{i}", "evidence_texts": [f"evidence a{i}"], "correction": f"fix a{i}"}
        for i in range(10)
    ],
    "system_beta": [
        {"claim": f"claim b{i}", "evidence_texts": [f"evidence b{i}"], "correction": f"fix b{i}"}
        for i in range(10)
    ],
}
tasks = create_batch(systems, raters=["tester", "other"], double_ratio=0.0, seed=1)
for task in tasks:
    task.raters = ["tester"]  # one rater owns the whole 20-task batch
service = EvalService(tasks)
app = build_app(service)

server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()

for _ in range(100):
    try:
        urllib.request.urlopen(f"http://127.0.0.1:{port}/api/progress", timeout=1)
        break
    except OSError:
        time.sleep(0.1)
print("READY", flush=True)
thread.join()
