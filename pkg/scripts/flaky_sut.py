#!/usr/bin/env python3
"""Line-oriented process adapter stub that hangs on every fifth request.

Reads one JSON request per line on stdin and writes one JSON response per
line on stdout. Requests 5, 10, 15, ... sleep far past any sane timeout so
the caller's watchdog fires; all other requests get a trivial valid query.
Used to exercise partial-failure handling, not to model a real translator.
"""

import json
import sys
import time

HANG_EVERY = 5
HANG_SECONDS = 3600.0


def main() -> None:
    seen = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        seen += 1
        if seen % HANG_EVERY == 0:
            time.sleep(HANG_SECONDS)
        request = json.loads(line)
        response = {
            "query": "SELECT 1",
            "explanation": "Stub answer for "
                           f"{request.get('case_id', 'unknown')}.",
        }
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
