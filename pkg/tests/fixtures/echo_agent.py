"""Stand-alone agent wrapper speaking the JSONL wire protocol on stdin/stdout.

Used by the subprocess transport tests; only the standard library is imported so the
script runs under any interpreter.
"""

import argparse
import json
import sys
import time


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser()
    parser.add_argument("--version", default="clarify-wire/1")
    parser.add_argument("--steps", type=int, default=2)
    parser.add_argument("--sleep", type=float, default=0.0)
    parser.add_argument("--slow-step", type=int, default=None, help="Only sleep on this step.")
    parser.add_argument("--oversize", type=int, default=0)
    parser.add_argument("--call", default=None, help="Tool to call instead of the first offered.")
    parser.add_argument("--answer", default="done")
    return parser.parse_args()


def emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record) + "\n")
    sys.stdout.flush()


def respond(request: dict, args: argparse.Namespace) -> dict:
    step = request["step_index"]
    if step > args.steps:
        return {"type": "finish", "answer": args.answer}
    offered = [tool["name"] for tool in request["tools"]]
    name = args.call or (offered[0] if offered else "noop")
    echo = {"turns": len(request["conversation"]), "passthrough": request.get("passthrough")}
    arguments = {"step": step}
    return {"type": "tool_call", "name": name, "arguments": arguments, "result": json.dumps(echo)}


def main() -> None:
    args = parse_args()
    emit({"type": "handshake", "protocol_version": args.version, "agent": "echo"})
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        if args.sleep and args.slow_step in (None, request["step_index"]):
            time.sleep(args.sleep)
        if args.oversize:
            emit({"type": "message", "text": "x" * args.oversize})
            continue
        emit(respond(request, args))


if __name__ == "__main__":
    main()
