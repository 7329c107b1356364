import argparse
import hashlib
import json
import sys


def canonical_report_hash(file_path: str) -> str:
    """
    Canonical SHA-256 of a JSON report: keys sorted, no extraneous whitespace,
    so two reports hash equal iff their data is equal.
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        print(f"\n❌ Error: File not found at '{file_path}'")
        sys.exit(2)
    except json.JSONDecodeError:
        print(f"\n❌ Error: File '{file_path}' is not a valid JSON report.")
        sys.exit(2)

    canonical_bytes = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return f"sha256:{hashlib.sha256(canonical_bytes).hexdigest()}"


def verify_report(file_path: str, expected: str) -> bool:
    """expected is either a hash ('sha256:...' or bare hex) or a second report path."""
    calculated = canonical_report_hash(file_path)
    if expected.endswith(".json"):
        expected_hash = canonical_report_hash(expected)
    else:
        expected_hash = expected.lower()
        if not expected_hash.startswith("sha256:"):
            expected_hash = f"sha256:{expected_hash}"

    print(f"Expected Hash:   {expected_hash}")
    print(f"Calculated Hash: {calculated}")
    return calculated == expected_hash


if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        description="Check that a JSON report matches an expected canonical hash or another report.",
        epilog="Example: python verify_report.py run1.json run8.json",
    )
    parser.add_argument("file_path", type=str, help="Path to the JSON report.")
    parser.add_argument("expected", type=str, help="Expected hash, or a second report to compare with.")
    args = parser.parse_args()

    if verify_report(args.file_path, args.expected):
        print("\n✅ Success: the reports are identical.")
        sys.exit(0)
    print("\n❌ Failure: hashes DO NOT match.")
    sys.exit(1)
