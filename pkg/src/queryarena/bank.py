"""Built-in question bank.

starter_bank() holds the nine classic drill questions (ids 15..23) used by
the admin panel demo and the grading suites; shadow_suite() adds more
shadow-graded questions so blind-test behaviour can be exercised across a
range of fixtures. All entries go through ingest_question, so reference
strings are precomputed and validated here too.
"""

from __future__ import annotations

from typing import Any

from .guard import Question, ingest_question


def _table_guide(columns: list[str], rows: list[list[Any]]) -> dict:
    return {"kind": "table", "columns": columns, "rows": rows}


def _image_guide(name: str) -> dict:
    return {"kind": "image", "url": f"/static/guides/{name}.png"}


def starter_specs() -> list[dict]:
    """Raw specs for the nine starter questions."""
    return [
        {
            "id": 15,
            "text": "From the given table, write a query that will display row for Kenneth Aguila.",
            "difficulty": 2,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT * FROM tbl_students WHERE last_name = 'Aguila'",
                "SELECT * FROM tbl_students WHERE first_name = 'Kenneth' AND last_name = 'Aguila'",
            ],
            "guides": [
                _table_guide(
                    ["id", "first_name", "last_name"],
                    [
                        [1, "Kenneth", "Aguila"],
                        [2, "Maria", "Santos"],
                        [3, "Jose", "Ramos"],
                    ],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_students",
                "columns": [
                    {"name": "id", "type": "INT", "nullable": False},
                    {"name": "first_name", "type": "VARCHAR(50)"},
                    {"name": "last_name", "type": "VARCHAR(50)"},
                ],
                # Kenneth is row 1 in the displayed guide but not here, so
                # position or id tricks cannot fabricate the answer
                "rows": [
                    [1, "Paolo", "Reyes"],
                    [2, "Alyssa", "Cruz"],
                    [3, "Miguel", "Bautista"],
                    [4, "Kenneth", "Aguila"],
                    [5, "Carlo", "Mendoza"],
                ],
            },
        },
        {
            "id": 16,
            "text": "Write a query that will create a table with the details provided on the image on top.",
            "difficulty": 3,
            "category": "CREATE",
            "grading_mode": "EXACT",
            "stored_answers": [
                "CREATE TABLE tbl_students (id INT, first_name VARCHAR(50), last_name VARCHAR(50))",
            ],
            "guides": [_image_guide("tbl_students_schema")],
        },
        {
            "id": 17,
            "text": "Write a query that will create a table with the details provided on the image on top.",
            "difficulty": 3,
            "category": "CREATE",
            "grading_mode": "EXACT",
            "stored_answers": [
                "CREATE TABLE tbl_phones (id INT, brand VARCHAR(30), model VARCHAR(30))",
            ],
            "guides": [_image_guide("tbl_phones_schema")],
        },
        {
            "id": 18,
            "text": "Write a query that will create a table with the details provided on the image on top.",
            "difficulty": 3,
            "category": "CREATE",
            "grading_mode": "EXACT",
            "stored_answers": [
                "CREATE TABLE tbl_jobs (id INT, title VARCHAR(40), salary INT)",
            ],
            "guides": [_image_guide("tbl_jobs_schema")],
        },
        {
            "id": 19,
            "text": "From the image given, write a query that will insert the following data in the table named 'tbl_countries'.",
            "difficulty": 2,
            "category": "INSERT",
            "grading_mode": "EXACT",
            "stored_answers": [
                "INSERT INTO tbl_countries VALUES (1, 'Philippines'), (2, 'Japan'), (3, 'Singapore')",
                "INSERT INTO tbl_countries (id, name) VALUES (1, 'Philippines'), (2, 'Japan'), (3, 'Singapore')",
            ],
            "guides": [
                _table_guide(
                    ["id", "name"],
                    [[1, "Philippines"], [2, "Japan"], [3, "Singapore"]],
                )
            ],
        },
        {
            "id": 20,
            "text": "Write a query that will delete all the data that has job_status equal to 'unemployed' in the table named 'employee_info'.",
            "difficulty": 2,
            "category": "DELETE",
            "grading_mode": "EXACT",
            "stored_answers": [
                "DELETE FROM employee_info WHERE job_status = 'unemployed'",
                "DELETE FROM employee_info WHERE job_status='unemployed'",
            ],
        },
        {
            "id": 21,
            "text": "Write a query that will delete all 'failed' in the 'exam_status' field inside the 'tbl_exam' table.",
            "difficulty": 2,
            "category": "DELETE",
            "grading_mode": "EXACT",
            "stored_answers": [
                "DELETE FROM tbl_exam WHERE exam_status = 'failed'",
                "DELETE FROM tbl_exam WHERE exam_status='failed'",
            ],
        },
        {
            "id": 22,
            "text": "Write a query that will delete a table named 'tbl_jobs'.",
            "difficulty": 1,
            "category": "DROP",
            "grading_mode": "EXACT",
            "stored_answers": ["DROP TABLE tbl_jobs"],
        },
        {
            "id": 23,
            "text": "Write a query that will get and display the table structure of table named 'tbl_phones'.",
            "difficulty": 1,
            "category": "DESCRIBE",
            "grading_mode": "EXACT",
            "stored_answers": ["DESCRIBE tbl_phones", "DESC tbl_phones"],
        },
    ]


def shadow_suite_specs() -> list[dict]:
    """Extra shadow-graded questions for blind-test coverage."""
    return [
        {
            "id": 101,
            "text": "Display every product priced above 100.",
            "difficulty": 1,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT * FROM tbl_products WHERE price > 100",
                "SELECT * FROM tbl_products WHERE 100 < price",
            ],
            "guides": [
                _table_guide(
                    ["id", "name", "price"],
                    [[1, "pencil", 15], [2, "backpack", 450], [3, "notebook", 60]],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_products",
                "columns": [
                    {"name": "id", "type": "INT", "nullable": False},
                    {"name": "name", "type": "VARCHAR(40)"},
                    {"name": "price", "type": "INT"},
                ],
                "rows": [
                    [1, "eraser", 10],
                    [2, "calculator", 350],
                    [3, "ballpen", 20],
                    [4, "schoolbag", 780],
                    [5, "ruler", 25],
                ],
            },
        },
        {
            "id": 102,
            "text": "Show the names of all employees working in the sales department.",
            "difficulty": 2,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT name FROM tbl_employees WHERE dept = 'sales'",
            ],
            "guides": [
                _table_guide(
                    ["id", "name", "dept"],
                    [[1, "Ana", "sales"], [2, "Ben", "hr"], [3, "Cara", "sales"]],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_employees",
                "columns": [
                    {"name": "id", "type": "INT", "nullable": False},
                    {"name": "name", "type": "VARCHAR(40)"},
                    {"name": "dept", "type": "VARCHAR(30)"},
                ],
                "rows": [
                    [1, "Diego", "hr"],
                    [2, "Elisa", "sales"],
                    [3, "Franco", "it"],
                    [4, "Grace", "sales"],
                    [5, "Hugo", "finance"],
                ],
            },
        },
        {
            "id": 103,
            "text": "List the students who scored at least 75 in math, highest score first.",
            "difficulty": 3,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT student FROM tbl_grades WHERE subject = 'math' AND score >= 75 ORDER BY score DESC",
            ],
            "guides": [
                _table_guide(
                    ["student", "subject", "score"],
                    [["Ivy", "math", 91], ["Jon", "math", 60], ["Kim", "science", 88]],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_grades",
                "columns": [
                    {"name": "student", "type": "VARCHAR(40)"},
                    {"name": "subject", "type": "VARCHAR(30)"},
                    {"name": "score", "type": "INT"},
                ],
                "rows": [
                    ["Lara", "math", 82],
                    ["Marco", "math", 74],
                    ["Nina", "science", 90],
                    ["Oscar", "math", 95],
                    ["Pia", "math", 75],
                ],
            },
        },
        {
            "id": 104,
            "text": "Show the titles of all books whose title contains the word 'database'.",
            "difficulty": 2,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT title FROM tbl_books WHERE title LIKE '%database%'",
            ],
            "guides": [
                _table_guide(
                    ["id", "title"],
                    [[1, "intro to database systems"], [2, "networking basics"]],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_books",
                "columns": [
                    {"name": "id", "type": "INT", "nullable": False},
                    {"name": "title", "type": "VARCHAR(60)"},
                    {"name": "author", "type": "VARCHAR(40)"},
                ],
                "rows": [
                    [1, "modern database design", "Quinto"],
                    [2, "operating systems", "Rivera"],
                    [3, "the database handbook", "Sison"],
                    [4, "discrete math", "Torres"],
                ],
            },
        },
        {
            "id": 105,
            "text": "Display the usernames of accounts that have never logged in.",
            "difficulty": 2,
            "category": "SELECT",
            "grading_mode": "SHADOW",
            "stored_answers": [
                "SELECT username FROM tbl_accounts WHERE last_login IS NULL",
            ],
            "guides": [
                _table_guide(
                    ["username", "last_login"],
                    [["alpha", "2024-05-01"], ["bravo", None]],
                )
            ],
            "shadow_fixture": {
                "visible_name": "tbl_accounts",
                "columns": [
                    {"name": "id", "type": "INT", "nullable": False},
                    {"name": "username", "type": "VARCHAR(30)"},
                    {"name": "last_login", "type": "DATE", "nullable": True},
                ],
                "rows": [
                    [1, "sierra", "2024-01-15"],
                    [2, "tango", None],
                    [3, "uniform", "2023-11-02"],
                    [4, "victor", None],
                ],
            },
        },
    ]


def starter_bank() -> list[Question]:
    return [ingest_question(spec) for spec in starter_specs()]


def shadow_suite() -> list[Question]:
    return [ingest_question(spec) for spec in shadow_suite_specs()]


def demo_bank() -> list[Question]:
    """Starter questions plus the shadow suite; large enough for casual draws."""
    return starter_bank() + shadow_suite()
