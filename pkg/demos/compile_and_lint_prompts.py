#!/usr/bin/env python3
"""Compile the three prompts from the shipped rule file and lint them.

Shows the landmark-relative phrasing the bench enforces: reaches are compared
against body landmarks, never against numeric angles, because numeric
quantification measurably increases model misjudgment.
"""

from romdx.prompts import (
    PromptKind,
    default_rule_set,
    lint_prompt,
    render_prompt,
    render_rules_block,
)


def main() -> None:
    rules = default_rule_set()
    print(f"rule set {rules.version}: {len(rules.movements)} movements, "
          f"signs: {', '.join(rules.compensation_signs)}\n")

    for kind in PromptKind:
        prompt = render_prompt(kind, rules)
        violations = lint_prompt(prompt)
        print(f"prompt {kind.value} ({kind.name.lower()}): {len(prompt.body)} chars, "
              f"checksum {prompt.checksum[:12]}, lint violations: {len(violations)}")
    print()

    block = render_rules_block(rules)
    in_a = block in render_prompt(PromptKind.DIAGNOSE, rules).body
    in_c = block in render_prompt(PromptKind.JUDGE, rules).body
    print(f"diagnosis and judge prompts share one rules block byte-for-byte: {in_a and in_c}\n")

    bad = "Ask the subject to flex the elbow at 30 degrees and lift the arm by 20 cm."
    print(f"linting a numeric instruction: {bad!r}")
    for violation in lint_prompt(bad):
        print(f"  [{violation.rule}] {violation.text!r} at offset {violation.position}")

    print("\nfull movement-description prompt:\n")
    print(render_prompt(PromptKind.DESCRIBE, rules).body)


if __name__ == "__main__":
    main()
