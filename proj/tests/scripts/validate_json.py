"""Validate JSON documents against a JSON schema: validate_json.py SCHEMA DOC..."""
import json
import sys

import jsonschema


def main() -> int:
    schema = json.load(open(sys.argv[1]))
    jsonschema.Draft7Validator.check_schema(schema)
    for path in sys.argv[2:]:
        jsonschema.validate(json.load(open(path)), schema)
        print(f"valid: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
