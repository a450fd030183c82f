#!/usr/bin/env python3
# Copyright 2026 The bimath Authors
# SPDX-License-Identifier: Apache-2.0
"""Builds tests/fixtures/answer_cases.jsonl, the frozen oracle table for
boxed-answer extraction and numeric normalization.

Two kinds of rows:
  * hand-written rows whose expected value is typed in literally;
  * generated rows whose expected value comes from the *generating* numbers
    via fractions.Fraction (never from parsing the rendered text).

Each row: {"output": model text, "span": expected boxed span or null,
           "kind": "numeric" | "choice" | "unparseable",
           "value": "p/q" | "B" | null}

Run from the repo root:  python3 tests/oracles/gen_answer_cases.py
"""
import json
import random
from fractions import Fraction
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "fixtures" / "answer_cases.jsonl"


def frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


rows = []


def num(output, span, value):
    rows.append({"output": output, "span": span, "kind": "numeric",
                 "value": frac_str(Fraction(value))})


def choice(output, span, letter):
    rows.append({"output": output, "span": span, "kind": "choice",
                 "value": letter})


def bad(output, span):
    rows.append({"output": output, "span": span, "kind": "unparseable",
                 "value": None})


# ---- hand-written rows --------------------------------------------------
num(r"Thus $\boxed{42}$.", "42", 42)
num(r"\boxed{\frac{3}{4}}", r"\frac{3}{4}", Fraction(3, 4))
num(r"\boxed{1} ... \boxed{7}", "7", 7)
num(r"\boxed{1,234}", "1,234", 1234)
num(r"\boxed{-0.5}", "-0.5", Fraction(-1, 2))
num(r"\boxed{\frac{7}{2}}", r"\frac{7}{2}", Fraction(7, 2))
num(r"\boxed{0.75}", "0.75", Fraction(3, 4))
num(r"answer: \boxed{ 12 }", " 12 ", 12)
num(r"\boxed{\dfrac{5}{10}}", r"\dfrac{5}{10}", Fraction(1, 2))
num(r"\boxed{\tfrac{2}{6}}", r"\tfrac{2}{6}", Fraction(1, 3))
num(r"\boxed{-\frac{1}{2}}", r"-\frac{1}{2}", Fraction(-1, 2))
num(r"\boxed{\frac{-1}{2}}", r"\frac{-1}{2}", Fraction(-1, 2))
num(r"\boxed{\frac{1}{-2}}", r"\frac{1}{-2}", Fraction(-1, 2))
num(r"\boxed{\frac34}", r"\frac34", Fraction(3, 4))
num(r"\boxed{3/4}", "3/4", Fraction(3, 4))
num(r"\boxed{-3/9}", "-3/9", Fraction(-1, 3))
num(r"\boxed{+5}", "+5", 5)
num(r"\boxed{.5}", ".5", Fraction(1, 2))
num(r"\boxed{5.}", "5.", 5)
num(r"\boxed{007}", "007", 7)
num(r"\boxed{1{,}000}", "1{,}000", 1000)
num(r"\boxed{1\,000}", r"1\,000", 1000)
num(r"\boxed{1\!234}", r"1\!234", 1234)
num(r"\boxed{12,345,678}", "12,345,678", 12345678)
num(r"\boxed{$18$}", "$18$", 18)
num(r"\boxed{\$18}", r"\$18", 18)
num(r"\boxed{18\text{ dollars}}", r"18\text{ dollars}", 18)
num(r"\boxed{90^\circ}", r"90^\circ", 90)
num(r"\boxed{90^{\circ}}", r"90^{\circ}", 90)
num(r"\boxed{25\%}", r"25\%", 25)
num(r"\boxed{\text{12}}", r"\text{12}", 12)
num(r"\boxed{\textbf{12}}", r"\textbf{12}", 12)
num(r"\boxed{\mathbf{-4}}", r"\mathbf{-4}", -4)
num(r"\boxed{1\frac{1}{2}}", r"1\frac{1}{2}", Fraction(3, 2))
num(r"\boxed{-2\frac{1}{3}}", r"-2\frac{1}{3}", Fraction(-7, 3))
num(r"\boxed{\frac{0.5}{2}}", r"\frac{0.5}{2}", Fraction(1, 4))
num(r"\boxed{\frac{\frac{1}{2}}{3}}", r"\frac{\frac{1}{2}}{3}", Fraction(1, 6))
num(r"\boxed{1.5 \times 10^{3}}", r"1.5 \times 10^{3}", 1500)
num(r"\boxed{2\cdot 10^{-2}}", r"2\cdot 10^{-2}", Fraction(1, 50))
num(r"\boxed{−7}", "−7", -7)
num(r"\boxed{0}", "0", 0)
num(r"\boxed{-0}", "-0", 0)
num(r"\boxed{12.}", "12.", 12)
num(r"\boxed{3.14159}", "3.14159", Fraction(314159, 100000))
num(r"\boxed{123456789012345678901234567890}", "123456789012345678901234567890",
    123456789012345678901234567890)
num("\\boxed{\n  64\n}", "\n  64\n", 64)
num(r"The final answer is $\boxed{64}$", "64", 64)
num(r"\boxed {8}", "8", 8)
num(r"\boxed{8}.", "8", 8)
num(r"\boxed{\left(8\right)}", r"\left(8\right)", 8)
num(r"\boxed{(8)}", "(8)", 8)
num(r"\boxed{x=8}", "x=8", 8)
num(r"\boxed{n = -3}", "n = -3", -3)
num(r"step \boxed{2} then \boxed{\frac{1}{3}} final", r"\frac{1}{3}", Fraction(1, 3))
num(r"\boxed{{12}}", "{12}", 12)
num("정답은 $\\boxed{15}$입니다.", "15", 15)
num(r"\boxed{\dfrac{100}{4}}", r"\dfrac{100}{4}", 25)
num(r"\boxed{0.125}", "0.125", Fraction(1, 8))
num(r"\boxed{-1,000.5}", "-1,000.5", Fraction(-2001, 2))
num(r"\boxed{\frac{6}{8}}", r"\frac{6}{8}", Fraction(3, 4))
choice(r"\boxed{B}", "B", "B")
choice(r"\boxed{(C)}", "(C)", "C")
choice(r"\boxed{A)}", "A)", "A")
choice(r"\boxed{D.}", "D.", "D")
choice(r"\boxed{\text{B}}", r"\text{B}", "B")
choice(r"\boxed{\textbf{(D)}}", r"\textbf{(D)}", "D")
choice(r"\boxed{C. 42 apples}", "C. 42 apples", "C")
choice(r"\boxed{A: yes}", "A: yes", "A")
choice(r"The answer is \boxed{ D }", " D ", "D")
bad("no marker at all", None)
bad("", None)
bad(r"\boxed", None)
bad(r"\boxed{12", None)
bad(r"\boxed 12", None)
bad(r"\boxed{}", "")
bad(r"\boxed{\sqrt{2}}", r"\sqrt{2}")
bad(r"\boxed{x+1}", "x+1")
bad(r"\boxed{1,23}", "1,23")
bad(r"\boxed{1,2,3}", "1,2,3")
bad(r"\boxed{\frac{1}{0}}", r"\frac{1}{0}")
bad(r"\boxed{1/0}", "1/0")
bad(r"\boxed{E}", "E")
bad(r"\boxed{AB}", "AB")
bad(r"\boxed{2\sqrt{2}}", r"2\sqrt{2}")
bad(r"\boxed{\pi}", r"\pi")
bad(r"\boxed{1.2.3}", "1.2.3")
bad(r"\boxed{--5}", "--5")
bad(r"\boxed{5} and then \boxed{7", None)
bad(r"\boxed{\{1,2\}}", r"\{1,2\}")
bad(r"\boxed{1e5}", "1e5")
bad(r"\fbox{5}", None)
bad(r"boxed{5}", None)
bad(r"\boxed{a}", "a")

# ---- generated rows -------------------------------------------------------
rng = random.Random(20240601)
WORDS = ["so", "the", "total", "is", "we", "get", "therefore", "answer",
         "값은", "따라서", "이다", "합은"]


def prose(n):
    return " ".join(rng.choice(WORDS) for _ in range(n))


def with_commas(n: int) -> str:
    s = str(abs(n))
    groups = []
    while len(s) > 3:
        groups.insert(0, s[-3:])
        s = s[:-3]
    groups.insert(0, s)
    return ("-" if n < 0 else "") + ",".join(groups)


for _ in range(40):  # integers, separators, noise around the marker
    n = rng.randint(-10**9, 10**9)
    text = with_commas(n) if rng.random() < 0.5 else str(n)
    out = f"{prose(rng.randint(0, 8))} $\\boxed{{{text}}}$ {prose(rng.randint(0, 4))}"
    num(out, text, n)

for _ in range(40):  # terminating decimals
    digits = rng.randint(1, 6)
    scaled = rng.randint(-10**7, 10**7)
    value = Fraction(scaled, 10**digits)
    sign = "-" if scaled < 0 else ""
    mag = str(abs(scaled)).rjust(digits + 1, "0")
    text = f"{sign}{mag[:-digits]}.{mag[-digits:]}"
    num(f"{prose(3)} \\boxed{{{text}}}", text, value)

for _ in range(50):  # LaTeX and slash fractions
    p = rng.randint(-500, 500)
    q = rng.randint(1, 500)
    style = rng.choice(["frac", "dfrac", "tfrac", "slash", "negfrac"])
    if style == "slash":
        text = f"{p}/{q}"
    elif style == "negfrac":
        text = f"-\\frac{{{abs(p)}}}{{{q}}}"
        p = -abs(p)
    else:
        text = f"\\{style}{{{p}}}{{{q}}}"
    num(f"{prose(4)} \\boxed{{{text}}}.", text, Fraction(p, q))

for _ in range(20):  # intermediate boxes, last one counts, nesting
    first = rng.randint(0, 99)
    a = rng.randint(1, 50)
    b = rng.randint(1, 50)
    text = f"\\frac{{{a}}}{{{b}}}"
    out = (f"first \\boxed{{{first}}} then {{braces {{ok}}}} "
           f"\\boxed{{{text}}} {prose(2)}")
    num(out, text, Fraction(a, b))

for _ in range(15):  # prose only, no marker
    bad(prose(rng.randint(1, 20)), None)

OUT.parent.mkdir(parents=True, exist_ok=True)
with OUT.open("w", encoding="utf-8") as f:
    for row in rows:
        f.write(json.dumps(row, ensure_ascii=False) + "\n")
print(f"wrote {len(rows)} rows to {OUT}")
