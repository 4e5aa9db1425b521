"""Reference wire-protocol server.

Wraps an evaluator behind the line-delimited JSON protocol so a parent
process can request density-matching rewards over stdin/stdout. Used as the
test double for external-evaluator integration and as the executable
documentation of the protocol (docs/protocol.md).

Run as a module:
    python -m labelaug.serve --model clf.json --val val.bin \
        --height 16 --width 16 --channels 1 --classes 4
    python -m labelaug.serve --echo     # always replies reward 0.0
"""

from __future__ import annotations

import argparse
import json
import sys

from .data import load_records
from .evaluator import PROTOCOL_VERSION, BuiltinEvaluator, load_classifier


class EchoEvaluator:
    """Protocol test double: every reward is 0.0."""

    def label_reward(self, triple, label, seed):
        return 0.0

    def dataset_reward(self, triple, seed):
        return 0.0


def serve_loop(make_evaluator, stdin=None, stdout=None) -> int:
    """Answer protocol requests until shutdown or EOF.

    make_evaluator(init_msg) -> evaluator; called once on the init message.
    Every request gets exactly one JSON-line reply except shutdown, which
    ends the session silently.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    evaluator = None

    def reply(obj):
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply({"error": "malformed json"})
            continue
        cmd = msg.get("cmd")
        if cmd == "init":
            try:
                evaluator = make_evaluator(msg)
                reply({"ok": True, "protocol_version": PROTOCOL_VERSION})
            except Exception as exc:  # noqa: BLE001 - report, keep serving
                reply({"error": f"init failed: {exc}"})
        elif cmd == "eval":
            if evaluator is None:
                reply({"error": "eval before init"})
                continue
            try:
                triple = tuple(int(t) for t in msg["triple"])
                seed = int(msg["seed"])
                if msg.get("scope", "label") == "dataset":
                    r = evaluator.dataset_reward(triple, seed)
                else:
                    r = evaluator.label_reward(triple, int(msg["label"]), seed)
                reply({"reward": r})
            except Exception as exc:  # noqa: BLE001
                reply({"error": str(exc)})
        elif cmd == "shutdown":
            return 0
        else:
            reply({"error": f"unknown cmd {cmd!r}"})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="labelaug-serve")
    parser.add_argument("--echo", action="store_true",
                        help="serve constant 0.0 rewards (protocol test double)")
    parser.add_argument("--model", help="exported classifier JSON")
    parser.add_argument("--val", help="validation data in binary record format")
    parser.add_argument("--height", type=int)
    parser.add_argument("--width", type=int)
    parser.add_argument("--channels", type=int)
    parser.add_argument("--classes", type=int)
    args = parser.parse_args(argv)

    if args.echo:
        return serve_loop(lambda msg: EchoEvaluator())

    required = [args.model, args.val, args.height, args.width, args.channels,
                args.classes]
    if any(v is None for v in required):
        parser.error("--model/--val/--height/--width/--channels/--classes "
                     "are required unless --echo")

    classifier = load_classifier(args.model)
    val = load_records(args.val, args.height, args.width, args.channels,
                       num_classes=args.classes)

    def make_evaluator(init_msg):
        n = init_msg.get("num_labels")
        if n is not None and int(n) != val.num_classes:
            raise ValueError(
                f"init num_labels {n} != validation classes {val.num_classes}")
        return BuiltinEvaluator(classifier, val)

    return serve_loop(make_evaluator)


if __name__ == "__main__":
    sys.exit(main())
