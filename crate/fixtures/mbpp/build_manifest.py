#!/usr/bin/env python3
"""Writes manifest.json for the MBPP-style fixture corpus.

Every gold solution is executed against its own asserts before the
manifest is written, so the fixture cannot ship a failing task.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

TASKS = [
    (
        "py-round-num",
        "Write a function to round the given number to the nearest multiple of a specific number.",
        """def round_num(n, m):
    a = (n // m) * m
    b = a + m
    return (b if n - a > m / 2 else a)
""",
        [
            "assert round_num(4722, 10) == 4720",
            "assert round_num(1111, 5) == 1110",
            "assert round_num(219, 2) == 218",
        ],
        """def round_num(n, m):
    a = (n // m) * m
    b = a + m
    return (b if n - a >= m / 2 else a)
""",
    ),
    (
        "py-kth-element",
        "Write a function to find the kth element in the given array.",
        """def kth_element(arr, n, k):
    return arr[k - 1]
""",
        [
            "assert kth_element([12, 3, 5, 7, 19], 5, 2) == 3",
            "assert kth_element([17, 24, 8, 23], 4, 3) == 8",
            "assert kth_element([16, 21, 25, 36, 4], 5, 4) == 36",
        ],
        """def kth_element(arr, n, k):
    arr.sort()
    return arr[k - 1]
""",
    ),
    (
        "py-prod-square",
        "Write a python function to check whether the given number can be represented by product of two squares or not.",
        """def prod_Square(n):
    for i in range(2, n + 1):
        if i * i < n + 1:
            for j in range(2, n + 1):
                if i * i * j * j == n:
                    return True
    return False
""",
        [
            "assert prod_Square(25) == False",
            "assert prod_Square(30) == False",
            "assert prod_Square(16) == True",
        ],
        """def prod_Square(n):
    for i in range(1, n + 1):
        if i * i == n:
            return True
    return False
""",
    ),
    (
        "py-last-digit",
        "Write a python function to find the last digit when factorial of a divides factorial of b.",
        """def compute_Last_Digit(A, B):
    variable = 1
    if A == B:
        return 1
    elif B - A >= 5:
        return 0
    else:
        for i in range(A + 1, B + 1):
            variable = (variable * (i % 10)) % 10
        return variable % 10
""",
        [
            "assert compute_Last_Digit(2, 4) == 2",
            "assert compute_Last_Digit(6, 8) == 6",
            "assert compute_Last_Digit(1, 2) == 2",
        ],
        """def compute_Last_Digit(A, B):
    def fact(x):
        if x <= 1:
            return 1
        return x * fact(x - 1)
    return str(fact(B) // fact(A))[0]
""",
    ),
    (
        "py-not-prime",
        "Write a python function to identify non-prime numbers.",
        """import math
def is_not_prime(n):
    result = False
    for i in range(2, int(math.sqrt(n)) + 1):
        if n % i == 0:
            result = True
    return result
""",
        [
            "assert is_not_prime(2) == False",
            "assert is_not_prime(10) == True",
            "assert is_not_prime(35) == True",
        ],
        None,
    ),
    (
        "py-similar-elements",
        "Write a function to find the shared elements from the given two lists.",
        """def similar_elements(test_tup1, test_tup2):
    return tuple(sorted(set(test_tup1) & set(test_tup2)))
""",
        [
            "assert similar_elements((3, 4, 5, 6), (5, 7, 4, 10)) == (4, 5)",
            "assert similar_elements((1, 2, 3, 4), (5, 4, 3, 7)) == (3, 4)",
            "assert similar_elements((11, 12, 14, 13), (17, 15, 14, 13)) == (13, 14)",
        ],
        None,
    ),
    (
        "py-square-nums",
        "Write a function to find squares of individual elements in a list.",
        """def square_nums(nums):
    return [x ** 2 for x in nums]
""",
        [
            "assert square_nums([1, 2, 3, 4]) == [1, 4, 9, 16]",
            "assert square_nums([10, 20, 30]) == [100, 400, 900]",
            "assert square_nums([12, 15]) == [144, 225]",
        ],
        None,
    ),
    (
        "py-remove-occ",
        "Write a python function to remove first and last occurrence of a given character from the string.",
        """def remove_Occ(s, ch):
    first = s.find(ch)
    if first != -1:
        s = s[:first] + s[first + 1:]
    last = s.rfind(ch)
    if last != -1:
        s = s[:last] + s[last + 1:]
    return s
""",
        [
            'assert remove_Occ("hello", "l") == "heo"',
            'assert remove_Occ("abcda", "a") == "bcd"',
            'assert remove_Occ("PHP", "P") == "H"',
        ],
        None,
    ),
    (
        "py-max-of-three",
        "Write a function to find the maximum of three numbers.",
        """def max_of_three(a, b, c):
    if a >= b and a >= c:
        return a
    if b >= c:
        return b
    return c
""",
        [
            "assert max_of_three(10, 20, 30) == 30",
            "assert max_of_three(55, 47, 39) == 55",
            "assert max_of_three(10, 49, 30) == 49",
        ],
        None,
    ),
    (
        "py-count-vowels",
        "Write a python function to count the number of vowels in a given string.",
        """def count_vowels(s):
    return sum(1 for ch in s.lower() if ch in "aeiou")
""",
        [
            'assert count_vowels("corner") == 2',
            'assert count_vowels("valid") == 2',
            'assert count_vowels("AEIOU") == 5',
        ],
        None,
    ),
    (
        "py-reverse-words",
        "Write a function to reverse words in a given string.",
        """def reverse_words(s):
    return " ".join(reversed(s.split()))
""",
        [
            'assert reverse_words("python program") == "program python"',
            'assert reverse_words("java language") == "language java"',
            'assert reverse_words("indian man") == "man indian"',
        ],
        None,
    ),
    (
        "py-factorial",
        "Write a function to compute the factorial of a non-negative integer using recursion.",
        """def factorial(n):
    if n <= 1:
        return 1
    return n * factorial(n - 1)
""",
        [
            "assert factorial(0) == 1",
            "assert factorial(5) == 120",
            "assert factorial(10) == 3628800",
        ],
        None,
    ),
    (
        "py-fibonacci",
        "Write a function to find the n-th fibonacci number, where fibonacci(1) = 1 and fibonacci(2) = 1.",
        """def fibonacci(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a
""",
        [
            "assert fibonacci(7) == 13",
            "assert fibonacci(8) == 21",
            "assert fibonacci(9) == 34",
        ],
        None,
    ),
    (
        "py-palindrome",
        "Write a function to check if the given string is a palindrome, ignoring case.",
        """def is_palindrome(s):
    t = s.lower()
    return t == t[::-1]
""",
        [
            'assert is_palindrome("Racecar") == True',
            'assert is_palindrome("python") == False',
            'assert is_palindrome("a") == True',
        ],
        None,
    ),
    (
        "py-flatten",
        "Write a function to flatten a given nested list structure.",
        """def flatten_list(items):
    result = []
    for item in items:
        if isinstance(item, list):
            result.extend(flatten_list(item))
        else:
            result.append(item)
    return result
""",
        [
            "assert flatten_list([0, 10, [20, 30], 40]) == [0, 10, 20, 30, 40]",
            "assert flatten_list([[1, [2, [3]]], 4]) == [1, 2, 3, 4]",
            "assert flatten_list([]) == []",
        ],
        None,
    ),
    (
        "py-second-smallest",
        "Write a function to find the second smallest distinct number in a list.",
        """def second_smallest(numbers):
    uniq = sorted(set(numbers))
    if len(uniq) < 2:
        return None
    return uniq[1]
""",
        [
            "assert second_smallest([1, 2, -8, -2, 0, -2]) == -2",
            "assert second_smallest([1, 1, -0.5, 0, 2, -2, -2]) == -0.5",
            "assert second_smallest([2, 2]) == None",
        ],
        None,
    ),
    (
        "py-count-digits",
        "Write a python function to count the number of digits of a given non-negative integer.",
        """def count_Digit(n):
    count = 1
    while n >= 10:
        n //= 10
        count += 1
    return count
""",
        [
            "assert count_Digit(12345) == 5",
            "assert count_Digit(11223305) == 8",
            "assert count_Digit(0) == 1",
        ],
        None,
    ),
    (
        "py-gcd",
        "Write a python function to find the greatest common divisor of two positive integers.",
        """def gcd(a, b):
    while b:
        a, b = b, a % b
    return a
""",
        [
            "assert gcd(12, 17) == 1",
            "assert gcd(4, 6) == 2",
            "assert gcd(2, 9) == 1",
        ],
        None,
    ),
    (
        "py-binary-to-decimal",
        "Write a function to convert the given binary number to its decimal equivalent.",
        """def binary_to_decimal(binary):
    decimal = 0
    for digit in str(binary):
        decimal = decimal * 2 + int(digit)
    return decimal
""",
        [
            "assert binary_to_decimal(100) == 4",
            "assert binary_to_decimal(1011) == 11",
            "assert binary_to_decimal(1101101) == 109",
        ],
        None,
    ),
    (
        "py-unique-elements",
        "Write a function to remove duplicate elements from a list while keeping the original order.",
        """def unique_elements(items):
    seen = set()
    result = []
    for item in items:
        if item not in seen:
            seen.add(item)
            result.append(item)
    return result
""",
        [
            "assert unique_elements([1, 2, 2, 3, 1]) == [1, 2, 3]",
            'assert unique_elements(["b", "a", "b"]) == ["b", "a"]',
            "assert unique_elements([]) == []",
        ],
        None,
    ),
    (
        "py-sum-of-squares",
        "Write a python function to find the sum of squares of the first n natural numbers.",
        """def square_Sum(n):
    total = 0
    for i in range(1, n + 1):
        total += i * i
    return total
""",
        [
            "assert square_Sum(2) == 5",
            "assert square_Sum(3) == 14",
            "assert square_Sum(4) == 30",
        ],
        None,
    ),
    (
        "py-even-parity",
        "Write a python function to check whether the given number has even parity, that is an even number of set bits.",
        """def check_Even_Parity(x):
    parity = 0
    while x != 0:
        x = x & (x - 1)
        parity += 1
    return parity % 2 == 0
""",
        [
            "assert check_Even_Parity(10) == True",
            "assert check_Even_Parity(11) == False",
            "assert check_Even_Parity(18) == True",
        ],
        None,
    ),
    (
        "py-merge-sorted",
        "Write a function to merge two sorted lists into a single sorted list.",
        """def merge_sorted(a, b):
    i, j = 0, 0
    out = []
    while i < len(a) and j < len(b):
        if a[i] <= b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out
""",
        [
            "assert merge_sorted([1, 3, 5], [2, 4, 6]) == [1, 2, 3, 4, 5, 6]",
            "assert merge_sorted([], [7]) == [7]",
            "assert merge_sorted([1, 1], [1]) == [1, 1, 1]",
        ],
        None,
    ),
]


def check(task_id, code, tests):
    for case in tests:
        scope = {}
        exec(compile(code, task_id, "exec"), scope)
        exec(case, scope)


def main():
    records = []
    for task_id, question, code, tests, predicted in TASKS:
        check(task_id, code, tests)
        record = {
            "task_id": task_id,
            "language": "python",
            "question": question,
            "gold_code": code,
            "context": {"tests": tests},
        }
        if predicted is not None:
            record["predicted_code"] = predicted
        records.append(record)
    manifest = {"origin": "mbpp_style", "tasks": records}
    with open(os.path.join(HERE, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print("wrote", len(records), "tasks")


if __name__ == "__main__":
    main()
