"""Bundled example suite, replay files, and manifests.

Everything here is synthetic and small (every table stays under 100 rows) so
the harness runs and tests offline. The "les-demo" suite covers all four
tiers:

    I   single-table questions over an HR roster
    II  joins and aggregation over a retail orders schema
    III a three-turn phone-records investigation plus implicit-intent cases
    IV  questions phrased in exercise-control jargon over a wargame schema

The replay builders derive degraded variants from the golden replay so each
rubric boundary (6/10, 5/10, 4/5, 3/5, 9/10, skipped tier) is pinned by a
shipped fixture.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

from .adapter import ReplayKey, write_replay
from .rubric import Level, REGIME_IDENTICAL, REGIME_LINGUISTIC
from .suite import (
    ALL_REGIMES,
    DatabaseFixture,
    SettingsProfile,
    TestCase,
    TestSuite,
    Turn,
    write_suite,
)

SUITE_ID = "les-demo"

WRONG_QUERY = "SELECT -1 AS wrong_answer"
BROKEN_QUERY = "SELCT stability FROM"

_EVERY_REGIME = frozenset(ALL_REGIMES)


# --- hr database (tier I) -----------------------------------------------------

_HR_SCHEMA = """\
CREATE TABLE employees (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    age INTEGER NOT NULL,
    department TEXT NOT NULL,
    salary INTEGER NOT NULL,
    hire_year INTEGER NOT NULL
);
"""

_EMPLOYEES = [
    (1, "Alice Nguyen", 34, "Human Resources", 72000, 2015),
    (2, "Bruno Costa", 41, "Human Resources", 68000, 2012),
    (3, "Chie Tanaka", 29, "Human Resources", 61000, 2019),
    (4, "Darius Webb", 52, "Human Resources", 83000, 2008),
    (5, "Elena Petrova", 38, "Engineering", 95000, 2014),
    (6, "Farid Haddad", 27, "Engineering", 88000, 2021),
    (7, "Grace Liu", 45, "Engineering", 102000, 2010),
    (8, "Henrik Olsen", 31, "Engineering", 91000, 2018),
    (9, "Imani Brooks", 36, "Finance", 79000, 2016),
    (10, "Jonas Meyer", 48, "Finance", 86000, 2009),
    (11, "Keiko Sato", 26, "Finance", 64000, 2022),
    (12, "Liam O'Brien", 55, "Finance", 99000, 2006),
]


def _sql_text(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def _insert(table: str, columns: Iterable[str], rows: Iterable[tuple]) -> str:
    statements = []
    column_list = ", ".join(columns)
    for row in rows:
        rendered = ", ".join(
            _sql_text(cell) if isinstance(cell, str) else str(cell)
            for cell in row
        )
        statements.append(
            f"INSERT INTO {table} ({column_list}) VALUES ({rendered});")
    return "\n".join(statements) + "\n"


def _hr_data() -> str:
    return _insert(
        "employees",
        ("id", "name", "age", "department", "salary", "hire_year"),
        _EMPLOYEES,
    )


# --- sales database (tier II plus one implicit-intent case) --------------------

_SALES_SCHEMA = """\
CREATE TABLE products (
    product_id INTEGER PRIMARY KEY,
    product_name TEXT NOT NULL,
    category TEXT NOT NULL,
    unit_price REAL NOT NULL
);
CREATE TABLE customers (
    customer_id INTEGER PRIMARY KEY,
    customer_name TEXT NOT NULL,
    region TEXT NOT NULL
);
CREATE TABLE orders (
    order_id INTEGER PRIMARY KEY,
    customer_id INTEGER NOT NULL REFERENCES customers(customer_id),
    product_id INTEGER NOT NULL REFERENCES products(product_id),
    quantity INTEGER NOT NULL,
    order_date TEXT NOT NULL
);
CREATE TABLE reps (
    rep_id INTEGER PRIMARY KEY,
    rep_name TEXT NOT NULL
);
CREATE TABLE rep_sales (
    rep_id INTEGER NOT NULL REFERENCES reps(rep_id),
    year INTEGER NOT NULL,
    total_sales INTEGER NOT NULL
);
"""

_PRODUCTS = [
    (1, "Falcon Laptop", "Computers", 1200.0),
    (2, "Garnet Phone", "Computers", 800.0),
    (3, "Harbor Tablet", "Computers", 450.0),
    (4, "Ivory Monitor", "Computers", 300.0),
    (5, "Jade Keyboard", "Accessories", 90.0),
    (6, "Kite Mouse", "Accessories", 40.0),
    (7, "Lumen Headset", "Audio", 150.0),
    (8, "Mesa Docking Station", "Accessories", 220.0),
    (9, "Nimbus Router", "Networking", 180.0),
    (10, "Opal Webcam", "Accessories", 75.0),
    (11, "Prism Speaker", "Audio", 130.0),
    (12, "Quartz Cable", "Accessories", 15.0),
]

_CUSTOMERS = [
    (1, "Acme West", "West"),
    (2, "Bluepine Retail", "West"),
    (3, "Cobalt Goods", "West"),
    (4, "Dune Trading", "West"),
    (5, "Eastlake Stores", "East"),
    (6, "Foundry Mart", "East"),
    (7, "Northgate Supply", "North"),
    (8, "Southbay Outfitters", "South"),
]

_REPS = [
    (1, "Maya Patel"),
    (2, "Owen Reed"),
    (3, "Priya Shah"),
    (4, "Quentin Ford"),
    (5, "Rosa Diaz"),
    (6, "Sam Becker"),
    (7, "Tara Lindqvist"),
    (8, "Umar Khan"),
]

# (rep_id, 2022 total, 2023 total); improvements are strictly distinct so the
# "best improvements" gold query has a unique answer set and order.
_REP_TOTALS = [
    (1, 50000, 90000),
    (2, 60000, 95000),
    (3, 45000, 75000),
    (4, 70000, 95500),
    (5, 52000, 72000),
    (6, 48000, 62000),
    (7, 81000, 90500),
    (8, 66000, 60000),
]

_H1_DATES = ("2023-01-10", "2023-02-14", "2023-03-09",
             "2023-04-21", "2023-05-05", "2023-06-18")

# Extra orders outside the West/H1-2023 window exercised by tier-II filters.
_EXTRA_ORDERS = [
    (5, 1, 2, "2023-02-02"),
    (5, 2, 1, "2023-03-03"),
    (6, 3, 3, "2023-04-04"),
    (6, 4, 1, "2023-05-05"),
    (7, 5, 2, "2023-06-06"),
    (8, 1, 1, "2023-07-07"),
    (1, 1, 1, "2022-11-20"),
    (2, 2, 2, "2023-08-15"),
    (3, 3, 1, "2022-12-01"),
    (8, 2, 1, "2023-09-09"),
]


def _sales_orders() -> list[tuple]:
    """Product k (1..11) gets 13-k orders from West customers inside
    January-June 2023, so order counts are strictly decreasing and the top-10
    cut is unambiguous; product 12 is never ordered at all."""
    rows = []
    order_id = 1
    for product_id in range(1, 12):
        for occurrence in range(13 - product_id):
            rows.append((
                order_id,
                (occurrence % 4) + 1,          # West customers 1..4
                product_id,
                (occurrence % 3) + 1,
                _H1_DATES[occurrence % len(_H1_DATES)],
            ))
            order_id += 1
    for customer_id, product_id, quantity, date in _EXTRA_ORDERS:
        rows.append((order_id, customer_id, product_id, quantity, date))
        order_id += 1
    return rows


def _sales_data() -> str:
    parts = [
        _insert("products",
                ("product_id", "product_name", "category", "unit_price"),
                _PRODUCTS),
        _insert("customers",
                ("customer_id", "customer_name", "region"),
                _CUSTOMERS),
        _insert("orders",
                ("order_id", "customer_id", "product_id", "quantity",
                 "order_date"),
                _sales_orders()),
        _insert("reps", ("rep_id", "rep_name"), _REPS),
        _insert("rep_sales", ("rep_id", "year", "total_sales"),
                [(rep, 2022, y22) for rep, y22, _ in _REP_TOTALS]
                + [(rep, 2023, y23) for rep, _, y23 in _REP_TOTALS]),
    ]
    return "".join(parts)


# --- les database (tier III investigation) -------------------------------------

_LES_SCHEMA = """\
CREATE TABLE names (
    id INTEGER PRIMARY KEY,
    fullname TEXT NOT NULL
);
CREATE TABLE subjects (
    id INTEGER PRIMARY KEY,
    named INTEGER NOT NULL REFERENCES names(id)
);
CREATE TABLE phonenumbers (
    subject_id INTEGER NOT NULL REFERENCES subjects(id),
    number TEXT NOT NULL
);
CREATE TABLE addresses (
    subject_id INTEGER NOT NULL REFERENCES subjects(id),
    street TEXT NOT NULL,
    city TEXT NOT NULL,
    state TEXT NOT NULL
);
CREATE TABLE tolls (
    id INTEGER PRIMARY KEY,
    caller_number TEXT NOT NULL,
    called_number TEXT NOT NULL,
    call_date TEXT NOT NULL,
    duration_seconds INTEGER NOT NULL
);
"""

FOCUS_NUMBER = "253-899-6732"

_SUBJECTS = [
    (1, "Dana Whitfield", FOCUS_NUMBER,
     "114 Cypress Lane", "Tacoma", "WA"),
    (2, "Marcus Vale", "206-555-0101", "22 Birch Ave", "Seattle", "WA"),
    (3, "Lena Ortiz", "253-555-0188", "9 Harbor View Rd", "Gig Harbor", "WA"),
    (4, "Theo Brandt", "425-555-0144", "310 Maple Ct", "Bellevue", "WA"),
    (5, "Sofia Marsh", "360-555-0123", "77 Alder St", "Olympia", "WA"),
    (6, "Victor Hale", "509-555-0180", "501 Basalt Way", "Spokane", "WA"),
    (7, "June Akana", "253-555-0147", "168 Driftwood Pl", "Lakewood", "WA"),
    (8, "Omar Farouk", "206-555-0175", "44 Union St", "Seattle", "WA"),
]

# Called numbers paired with call counts 12 down to 1; strictly decreasing
# counts keep the top-10 ranking free of ties. The first seven belong to
# known subjects, the rest are unattributed.
_CALLED_NUMBERS = [
    ("206-555-0101", 12),
    ("253-555-0188", 11),
    ("425-555-0144", 10),
    ("360-555-0123", 9),
    ("509-555-0180", 8),
    ("253-555-0147", 7),
    ("206-555-0175", 6),
    ("971-555-0134", 5),
    ("818-555-0199", 4),
    ("303-555-0112", 3),
    ("702-555-0156", 2),
    ("915-555-0170", 1),
]


def _les_data() -> str:
    names = [(sid, fullname) for sid, fullname, *_ in _SUBJECTS]
    subjects = [(sid, sid) for sid, *_ in _SUBJECTS]
    phones = [(sid, number) for sid, _, number, *_ in _SUBJECTS]
    addresses = [(sid, street, city, state)
                 for sid, _, _, street, city, state in _SUBJECTS]
    tolls = []
    toll_id = 1
    for number, count in _CALLED_NUMBERS:
        for occurrence in range(count):
            tolls.append((
                toll_id,
                FOCUS_NUMBER,
                number,
                f"2023-03-{(toll_id % 28) + 1:02d}",
                30 + (toll_id * 7) % 270,
            ))
            toll_id += 1
    return "".join([
        _insert("names", ("id", "fullname"), names),
        _insert("subjects", ("id", "named"), subjects),
        _insert("phonenumbers", ("subject_id", "number"), phones),
        _insert("addresses", ("subject_id", "street", "city", "state"),
                addresses),
        _insert("tolls", ("id", "caller_number", "called_number",
                          "call_date", "duration_seconds"), tolls),
    ])


# --- exercise database (tier IV) ------------------------------------------------

_EXERCISE_SCHEMA = """\
CREATE TABLE units (
    unit_id INTEGER PRIMARY KEY,
    callsign TEXT NOT NULL,
    force TEXT NOT NULL,
    unit_type TEXT NOT NULL
);
CREATE TABLE exercises (
    exercise_id INTEGER PRIMARY KEY,
    exercise_name TEXT NOT NULL,
    start_date TEXT NOT NULL
);
CREATE TABLE engagements (
    engagement_id INTEGER PRIMARY KEY,
    exercise_id INTEGER NOT NULL REFERENCES exercises(exercise_id),
    attacker_id INTEGER NOT NULL REFERENCES units(unit_id),
    defender_id INTEGER NOT NULL REFERENCES units(unit_id),
    engagement_date TEXT NOT NULL,
    outcome TEXT NOT NULL
);
CREATE TABLE deployments (
    unit_id INTEGER NOT NULL REFERENCES units(unit_id),
    exercise_id INTEGER NOT NULL REFERENCES exercises(exercise_id),
    sector TEXT NOT NULL
);
"""

_UNITS = [
    (1, "Foxtrot-6", "Blue", "recon"),
    (2, "Delta-2", "Blue", "infantry"),
    (3, "Echo-9", "Blue", "armor"),
    (4, "Sierra-1", "Blue", "artillery"),
    (5, "Tango-3", "Blue", "armor"),
    (6, "Victor-7", "Blue", "infantry"),
    (7, "Krasny-1", "Red", "armor"),
    (8, "Zarya-4", "Red", "infantry"),
    (9, "Molot-8", "Red", "artillery"),
    (10, "Vostok-2", "Red", "armor"),
    (11, "Stal-5", "Red", "infantry"),
    (12, "Grom-3", "Red", "recon"),
]

_EXERCISES = [
    (1, "Thunderbolt", "2023-09-01"),
    (2, "Ironclad", "2024-02-01"),
]

# (exercise_id, attacker_id, defender_id, date, outcome)
_ENGAGEMENTS = [
    (1, 7, 1, "2023-09-02", "attacker"),
    (1, 7, 1, "2023-09-03", "defender"),
    (1, 8, 1, "2023-09-03", "stalemate"),
    (1, 9, 1, "2023-09-04", "attacker"),
    (1, 8, 2, "2023-09-04", "attacker"),
    (1, 9, 2, "2023-09-05", "defender"),
    (1, 7, 3, "2023-09-05", "stalemate"),
    (1, 10, 4, "2023-09-06", "attacker"),
    (1, 1, 11, "2023-09-06", "attacker"),
    (1, 2, 12, "2023-09-07", "defender"),
    (1, 5, 10, "2023-09-07", "attacker"),
    (1, 12, 5, "2023-09-08", "stalemate"),
    (1, 11, 1, "2023-09-08", "defender"),
    (1, 8, 1, "2023-09-09", "attacker"),
    (1, 6, 9, "2023-09-09", "attacker"),
    (1, 7, 1, "2023-09-10", "attacker"),
    (1, 9, 3, "2023-09-10", "stalemate"),
    (1, 10, 2, "2023-09-11", "defender"),
    (2, 10, 1, "2024-02-02", "attacker"),
    (2, 12, 2, "2024-02-03", "attacker"),
    (2, 7, 4, "2024-02-03", "defender"),
    (2, 1, 8, "2024-02-04", "stalemate"),
    (2, 8, 3, "2024-02-04", "attacker"),
    (2, 5, 11, "2024-02-05", "defender"),
    (2, 9, 1, "2024-02-05", "defender"),
    (2, 3, 7, "2024-02-06", "attacker"),
    (2, 2, 10, "2024-02-06", "stalemate"),
    (2, 4, 12, "2024-02-07", "attacker"),
]

_DEPLOYMENTS = [
    (1, 1, "north"),
    (7, 1, "north"),
    (8, 1, "north"),
    (2, 1, "south"),
    (9, 1, "south"),
    (3, 1, "east"),
    (4, 1, "west"),
    (10, 1, "west"),
    (5, 2, "north"),
    (6, 2, "south"),
]


def _exercise_data() -> str:
    engagements = [
        (index + 1, *row) for index, row in enumerate(_ENGAGEMENTS)
    ]
    return "".join([
        _insert("units", ("unit_id", "callsign", "force", "unit_type"),
                _UNITS),
        _insert("exercises", ("exercise_id", "exercise_name", "start_date"),
                _EXERCISES),
        _insert("engagements",
                ("engagement_id", "exercise_id", "attacker_id", "defender_id",
                 "engagement_date", "outcome"),
                engagements),
        _insert("deployments", ("unit_id", "exercise_id", "sector"),
                _DEPLOYMENTS),
    ])


# --- cases ----------------------------------------------------------------------


def _case(case_id: str, tier: Level, db_id: str, turns: list[Turn],
          regimes: frozenset[str] = frozenset(),
          tags: tuple[str, ...] = ()) -> TestCase:
    return TestCase(case_id=case_id, tier=tier, db_id=db_id,
                    turns=tuple(turns), consistency_regimes=regimes,
                    tags=tags)


def _tier1_cases() -> list[TestCase]:
    simple = [
        ("hr-count-engineering",
         "How many employees work in Engineering?",
         "SELECT COUNT(*) FROM employees WHERE department = 'Engineering'"),
        ("hr-avg-age-finance",
         "What is the average age of Finance employees?",
         "SELECT AVG(age) FROM employees WHERE department = 'Finance'"),
        ("hr-over-40",
         "Which employees are older than 40? List their names.",
         "SELECT name FROM employees WHERE age > 40"),
        ("hr-max-salary",
         "What is the highest salary in the company?",
         "SELECT MAX(salary) FROM employees"),
        ("hr-departments",
         "List the distinct departments.",
         "SELECT DISTINCT department FROM employees"),
        ("hr-hired-after-2015",
         "Show the names of employees hired after 2015.",
         "SELECT name FROM employees WHERE hire_year > 2015"),
        ("hr-salary-by-dept",
         "What is the total salary cost of each department?",
         "SELECT department, SUM(salary) FROM employees GROUP BY department"),
    ]
    cases = [
        _case(
            "hr-names-ages", Level.I, "hr",
            [Turn(
                question="What are the names and ages of all employees in "
                         "the Human Resources department?",
                gold_query="SELECT name, age FROM employees "
                           "WHERE department = 'Human Resources'",
                paraphrases=(
                    "List the name and age of every employee working in "
                    "Human Resources.",
                    "Show each Human Resources employee's name and age.",
                    "For everyone in the Human Resources department, what "
                    "is their name and age?",
                    "Give me names and ages for all staff in Human "
                    "Resources.",
                ),
            )],
            regimes=_EVERY_REGIME,
        ),
    ]
    for case_id, question, gold in simple:
        cases.append(_case(case_id, Level.I, "hr",
                           [Turn(question=question, gold_query=gold)]))
    cases.append(_case(
        "hr-youngest", Level.I, "hr",
        [Turn(question="Who is the youngest employee?",
              gold_query="SELECT name FROM employees ORDER BY age ASC "
                         "LIMIT 1",
              order_sensitive=True)],
    ))
    cases.append(_case(
        "hr-names-alphabetical", Level.I, "hr",
        [Turn(question="List all employee names in alphabetical order.",
              gold_query="SELECT name FROM employees ORDER BY name ASC",
              order_sensitive=True)],
    ))
    return cases


_TOP_PRODUCTS_GOLD = (
    "SELECT p.product_name, COUNT(*) AS order_count "
    "FROM orders o "
    "JOIN customers c ON o.customer_id = c.customer_id "
    "JOIN products p ON o.product_id = p.product_id "
    "WHERE c.region = 'West' "
    "AND o.order_date >= '2023-01-01' AND o.order_date <= '2023-06-30' "
    "GROUP BY p.product_id, p.product_name "
    "ORDER BY order_count DESC "
    "LIMIT 10"
)


def _tier2_cases() -> list[TestCase]:
    cases = [
        _case(
            "sales-top-products", Level.II, "sales",
            [Turn(
                question="What are the top 10 products that have been "
                         "ordered by customers located in the West region "
                         "between January and June 2023?",
                gold_query=_TOP_PRODUCTS_GOLD,
                order_sensitive=True,
                paraphrases=(
                    "Between January and June 2023, which 10 products did "
                    "West-region customers order most often?",
                    "Show the ten most frequently ordered products for "
                    "customers in the West region from January through "
                    "June 2023.",
                    "Rank the top ten products by order count among West "
                    "region customers in the first half of 2023.",
                    "Which products lead in orders from West customers "
                    "between 2023-01-01 and 2023-06-30? Give the top 10.",
                ),
            )],
            regimes=_EVERY_REGIME,
        ),
        _case(
            "sales-revenue-by-category", Level.II, "sales",
            [Turn(
                question="What is the total revenue per product category?",
                gold_query="SELECT p.category, SUM(o.quantity * p.unit_price)"
                           " FROM orders o JOIN products p "
                           "ON o.product_id = p.product_id "
                           "GROUP BY p.category",
            )],
        ),
        _case(
            "sales-west-customers", Level.II, "sales",
            [Turn(
                question="Which customers are located in the West region?",
                gold_query="SELECT customer_name FROM customers "
                           "WHERE region = 'West'",
            )],
        ),
        _case(
            "sales-orders-per-region", Level.II, "sales",
            [Turn(
                question="How many orders came from each region during "
                         "2023?",
                gold_query="SELECT c.region, COUNT(*) FROM orders o "
                           "JOIN customers c "
                           "ON o.customer_id = c.customer_id "
                           "WHERE o.order_date >= '2023-01-01' "
                           "AND o.order_date <= '2023-12-31' "
                           "GROUP BY c.region",
            )],
        ),
        _case(
            "sales-never-ordered", Level.II, "sales",
            [Turn(
                question="Which products have never been ordered?",
                gold_query="SELECT product_name FROM products "
                           "WHERE product_id NOT IN "
                           "(SELECT product_id FROM orders)",
            )],
        ),
    ]
    return cases


_LES_TURN1_GOLD = (
    "SELECT s.id, n.fullname, a.street, a.city, a.state "
    "FROM subjects s "
    "JOIN phonenumbers p ON s.id = p.subject_id "
    "JOIN addresses a ON s.id = a.subject_id "
    "JOIN names n ON s.named = n.id "
    f"WHERE p.number = '{FOCUS_NUMBER}'"
)

_LES_TURN2_GOLD = (
    "SELECT called_number, COUNT(*) AS call_count "
    "FROM tolls "
    f"WHERE caller_number = '{FOCUS_NUMBER}' "
    "GROUP BY called_number "
    "ORDER BY call_count DESC "
    "LIMIT 10"
)

_LES_TURN3_GOLD = (
    "SELECT DISTINCT n.fullname, a.street, a.city, a.state "
    "FROM tolls t "
    "JOIN phonenumbers p ON t.called_number = p.number "
    "JOIN subjects s ON p.subject_id = s.id "
    "JOIN names n ON s.named = n.id "
    "JOIN addresses a ON a.subject_id = s.id "
    f"WHERE t.caller_number = '{FOCUS_NUMBER}'"
)


def _tier3_cases() -> list[TestCase]:
    return [
        _case(
            "les-phone-records", Level.III, "les",
            [
                Turn(
                    question=f"Are there any records for {FOCUS_NUMBER}?",
                    gold_query=_LES_TURN1_GOLD,
                    notes="Subject-profile join across subjects, phone "
                          "numbers, addresses, and names; written without "
                          "schema-qualified table prefixes because the "
                          "embedded engine uses a single namespace.",
                ),
                Turn(
                    question="What are the top 10 most frequently called "
                             "numbers for this person?",
                    gold_query=_LES_TURN2_GOLD,
                    order_sensitive=True,
                ),
                Turn(
                    question="Plot the known entities associated with these "
                             "numbers on a map.",
                    gold_query=_LES_TURN3_GOLD,
                    notes="Scored on the retrieval query only; map rendering "
                          "is outside the harness's scope.",
                ),
            ],
        ),
        _case(
            "sales-best-improvers", Level.III, "sales",
            [Turn(
                question="List 5 employees who have shown best sales "
                         "improvements.",
                gold_query="SELECT r.rep_name FROM reps r "
                           "JOIN rep_sales s22 ON r.rep_id = s22.rep_id "
                           "AND s22.year = 2022 "
                           "JOIN rep_sales s23 ON r.rep_id = s23.rep_id "
                           "AND s23.year = 2023 "
                           "ORDER BY (s23.total_sales - s22.total_sales) "
                           "DESC LIMIT 5",
                order_sensitive=True,
                notes="Improvement is implicitly year-over-year growth from "
                      "2022 to 2023.",
            )],
            tags=("implicit-intent",),
        ),
        _case(
            "hr-most-experienced", Level.III, "hr",
            [Turn(
                question="Who are our five most seasoned employees?",
                gold_query="SELECT name FROM employees "
                           "ORDER BY hire_year ASC LIMIT 5",
                order_sensitive=True,
                notes="Seniority is implicitly earliest hire year.",
            )],
            tags=("implicit-intent",),
        ),
    ]


def _tier4_cases() -> list[TestCase]:
    questions = [
        ("ex-red-engaged-foxtrot",
         "Which Red Force units engaged Foxtrot-6 during Exercise "
         "Thunderbolt?",
         "SELECT DISTINCT u.callsign FROM engagements e "
         "JOIN units u ON e.attacker_id = u.unit_id "
         "JOIN units d ON e.defender_id = d.unit_id "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE u.force = 'Red' AND d.callsign = 'Foxtrot-6' "
         "AND x.exercise_name = 'Thunderbolt'"),
        ("ex-thunderbolt-engagements",
         "How many engagements were fought during Exercise Thunderbolt?",
         "SELECT COUNT(*) FROM engagements e "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE x.exercise_name = 'Thunderbolt'"),
        ("ex-armor-attackers",
         "List the callsigns of armor units that initiated at least one "
         "engagement.",
         "SELECT DISTINCT u.callsign FROM engagements e "
         "JOIN units u ON e.attacker_id = u.unit_id "
         "WHERE u.unit_type = 'armor'"),
        ("ex-red-wins",
         "How many engagements did Red Force attackers win during Exercise "
         "Thunderbolt?",
         "SELECT COUNT(*) FROM engagements e "
         "JOIN units u ON e.attacker_id = u.unit_id "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE u.force = 'Red' AND e.outcome = 'attacker' "
         "AND x.exercise_name = 'Thunderbolt'"),
        ("ex-sector-deployments",
         "Which units were deployed to the northern sector during Exercise "
         "Thunderbolt?",
         "SELECT u.callsign FROM deployments dp "
         "JOIN units u ON dp.unit_id = u.unit_id "
         "JOIN exercises x ON dp.exercise_id = x.exercise_id "
         "WHERE dp.sector = 'north' AND x.exercise_name = 'Thunderbolt'"),
        ("ex-stalemates",
         "List the engagement dates of all stalemates in Exercise "
         "Thunderbolt.",
         "SELECT e.engagement_date FROM engagements e "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE e.outcome = 'stalemate' "
         "AND x.exercise_name = 'Thunderbolt'"),
        ("ex-recon-red",
         "Which Red Force recon units are in the order of battle?",
         "SELECT callsign FROM units "
         "WHERE force = 'Red' AND unit_type = 'recon'"),
        ("ex-blue-defense-rate",
         "How many engagements in Exercise Thunderbolt ended with the "
         "defender holding?",
         "SELECT COUNT(*) FROM engagements e "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE e.outcome = 'defender' "
         "AND x.exercise_name = 'Thunderbolt'"),
        ("ex-cross-exercise",
         "Which units attacked in both Exercise Thunderbolt and Exercise "
         "Ironclad?",
         "SELECT u.callsign FROM units u WHERE u.unit_id IN "
         "(SELECT e.attacker_id FROM engagements e "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE x.exercise_name = 'Thunderbolt') "
         "AND u.unit_id IN "
         "(SELECT e.attacker_id FROM engagements e "
         "JOIN exercises x ON e.exercise_id = x.exercise_id "
         "WHERE x.exercise_name = 'Ironclad')"),
    ]
    cases = [
        _case(case_id, Level.IV, "exercise",
              [Turn(question=question, gold_query=gold)])
        for case_id, question, gold in questions
    ]
    cases.append(_case(
        "ex-most-engaged-defender", Level.IV, "exercise",
        [Turn(
            question="Which unit took the most incoming engagements across "
                     "all exercises?",
            gold_query="SELECT d.callsign FROM engagements e "
                       "JOIN units d ON e.defender_id = d.unit_id "
                       "GROUP BY d.callsign ORDER BY COUNT(*) DESC LIMIT 1",
            order_sensitive=True,
        )],
    ))
    return cases


def les_demo_suite() -> TestSuite:
    """The bundled suite, constructed in memory."""
    databases = {
        "hr": DatabaseFixture("hr", _HR_SCHEMA, _hr_data()),
        "sales": DatabaseFixture("sales", _SALES_SCHEMA, _sales_data()),
        "les": DatabaseFixture("les", _LES_SCHEMA, _les_data()),
        "exercise": DatabaseFixture("exercise", _EXERCISE_SCHEMA,
                                    _exercise_data()),
    }
    cases = (_tier1_cases() + _tier2_cases() + _tier3_cases()
             + _tier4_cases())
    cases.sort(key=lambda c: (int(c.tier), c.case_id))
    return TestSuite(
        suite_id=SUITE_ID,
        name="Bundled investigation and retail demo suite",
        databases=databases,
        cases=tuple(cases),
        settings_variants=(
            SettingsProfile("baseline",
                            (("prompt_template", "standard"),
                             ("temperature", 0.0)), True),
            SettingsProfile("exploratory",
                            (("prompt_template", "verbose"),
                             ("temperature", 0.7)), False),
        ),
        repeat_count=5,
    )


# --- replay builders --------------------------------------------------------------


def _golden_response(suite: TestSuite, case: TestCase, turn_index: int,
                     profile: SettingsProfile) -> dict:
    turn = case.turns[turn_index]
    return {
        "query": turn.gold_query,
        "explanation": (
            f"Turn {turn_index} of {case.case_id}: the question maps to a "
            f"single read-only query over the {case.db_id} schema."),
        "trace": [
            {"step": 1,
             "description": f"Inspect the {case.db_id} schema and pick the "
                            "tables the question needs."},
            {"step": 2,
             "description": "Derive filters, joins, and output columns from "
                            "the question and conversation."},
            {"step": 3,
             "description": "Compose and validate the final query.",
             "query": turn.gold_query},
        ],
        "metadata": {
            "engine": "bundled-golden-replay",
            "profile": profile.profile_id,
        },
    }


def golden_replay_entries(suite: TestSuite) -> dict[ReplayKey, dict]:
    """Every key the harness could request, mapped to the gold answer with a
    full transparency payload."""
    entries: dict[ReplayKey, dict] = {}
    for case in suite.cases:
        for turn_index, turn in enumerate(case.turns):
            for profile in suite.settings_variants:
                for paraphrase_index in range(len(turn.paraphrases) + 1):
                    for sample in range(suite.repeat_count):
                        key = (case.case_id, turn_index, profile.profile_id,
                               paraphrase_index, sample)
                        entries[key] = _golden_response(
                            suite, case, turn_index, profile)
    return entries


def strip_traces(entries: Mapping[ReplayKey, dict]) -> dict[ReplayKey, dict]:
    out = {}
    for key, response in entries.items():
        response = dict(response)
        response.pop("trace", None)
        out[key] = response
    return out


def strip_explanations(entries: Mapping[ReplayKey, dict]
                       ) -> dict[ReplayKey, dict]:
    out = {}
    for key, response in entries.items():
        response = dict(response)
        response.pop("explanation", None)
        out[key] = response
    return out


def _replace_response(query: str) -> dict:
    return {"query": query,
            "explanation": "Degraded fixture response.",
            "trace": [{"step": 1, "description": "Degraded fixture step.",
                       "query": query}],
            "metadata": {"engine": "bundled-degraded-replay"}}


def break_cases(entries: Mapping[ReplayKey, dict],
                case_ids: Iterable[str],
                query: str = WRONG_QUERY) -> dict[ReplayKey, dict]:
    """Make every response for the given cases return a wrong query."""
    targets = set(case_ids)
    return {
        key: (_replace_response(query) if key[0] in targets
              else response)
        for key, response in entries.items()
    }


def degraded_tier_cases(suite: TestSuite, tier: Level,
                        broken: int) -> list[str]:
    """Deterministic pick of cases to break in a tier, skipping any case that
    participates in a consistency regime so those fixtures stay golden."""
    eligible = sorted(
        case.case_id for case in suite.cases_in_tier(tier)
        if not case.consistency_regimes
    )
    if broken > len(eligible):
        raise ValueError(
            f"cannot break {broken} cases in tier {tier.roman}; only "
            f"{len(eligible)} non-consistency cases available")
    return eligible[:broken]


def break_identical_samples(suite: TestSuite,
                            entries: Mapping[ReplayKey, dict],
                            broken_per_group: int,
                            query: str = BROKEN_QUERY
                            ) -> dict[ReplayKey, dict]:
    """Break the highest sample indices of every identical-regime group,
    leaving sample 0 intact so accuracy stays golden."""
    out = dict(entries)
    default = suite.default_profile().profile_id
    for case in suite.cases:
        if not case.participates(REGIME_IDENTICAL):
            continue
        turn_index = case.measured_turn_index
        samples = range(suite.repeat_count - 1,
                        suite.repeat_count - 1 - broken_per_group, -1)
        for sample in samples:
            if sample < 1:
                raise ValueError("cannot break sample 0; accuracy shares it")
            key = (case.case_id, turn_index, default, 0, sample)
            out[key] = _replace_response(query)
    return out


def break_linguistic_paraphrases(suite: TestSuite,
                                 entries: Mapping[ReplayKey, dict],
                                 broken_per_group: int,
                                 query: str = WRONG_QUERY
                                 ) -> dict[ReplayKey, dict]:
    """Break the highest paraphrase indices of every linguistic-regime group,
    leaving the canonical question (index 0) intact."""
    out = dict(entries)
    default = suite.default_profile().profile_id
    for case in suite.cases:
        if not case.participates(REGIME_LINGUISTIC):
            continue
        turn_index = case.measured_turn_index
        variant_count = len(case.turns[turn_index].paraphrases) + 1
        indices = range(variant_count - 1,
                        variant_count - 1 - broken_per_group, -1)
        for paraphrase_index in indices:
            if paraphrase_index < 1:
                raise ValueError(
                    "cannot break the canonical question; accuracy shares it")
            key = (case.case_id, turn_index, default, paraphrase_index, 0)
            out[key] = _replace_response(query)
    return out


# --- manifests and descriptors ------------------------------------------------------

_DOC_TEXT = {
    "model-documentation": (
        "# Model Overview\n\n"
        "The translator is a fine-tuned language model that maps natural "
        "language questions to single read-only SQL statements. It receives "
        "the full schema DDL and prior conversation turns with every "
        "request.\n"
    ),
    "data-documentation": (
        "# Training Data Sources\n\n"
        "Training pairs come from synthetic question/query corpora plus "
        "curated public text-to-SQL datasets. No customer data is used; "
        "provenance for each corpus is tracked in the data register.\n"
    ),
    "performance-limitations": (
        "# Performance and Limitations\n\n"
        "Accuracy degrades on queries needing implicit domain knowledge or "
        "more than four joins. Known failure modes: date-range off-by-one "
        "errors, silent column transposition on wide schemas, and dialect "
        "drift outside the embedded engine's common core.\n"
    ),
    "ethical-societal": (
        "# Ethical and Societal Impact\n\n"
        "The system surfaces records about natural persons, so deployments "
        "must document lawful basis, minimize retention, and restrict "
        "access paths. Query logs are auditable to deter misuse.\n"
    ),
    "bias-mitigation": (
        "# Bias Mitigation Framework\n\n"
        "Generated queries are screened for selection criteria that proxy "
        "protected attributes; flagged generations require review. The "
        "screening list and its escalation procedure are versioned here.\n"
    ),
}

_DOC_IDS = {
    "model-documentation": "model-overview",
    "data-documentation": "training-data",
    "performance-limitations": "performance-limits",
    "ethical-societal": "ethics-impact",
    "bias-mitigation": "bias-framework",
}


def write_manifest(directory: str | Path, kinds: Iterable[str],
                   features: Mapping[str, bool]) -> Path:
    """Write a manifest plus its document files; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    documents = {}
    for kind in kinds:
        file_name = f"{_DOC_IDS[kind]}.md"
        (directory / file_name).write_text(_DOC_TEXT[kind], encoding="utf-8")
        entry: dict = {"path": file_name, "kind": kind}
        if kind == "bias-mitigation":
            entry["attested"] = True
        documents[_DOC_IDS[kind]] = entry
    manifest_path = directory / "manifest.json"
    payload = {"documents": documents, "features": dict(sorted(features.items()))}
    manifest_path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
        + "\n",
        encoding="utf-8")
    return manifest_path


ALL_DOC_KINDS = tuple(_DOC_IDS)

FULL_FEATURES = {
    "minimal-traceability": True,
    "feedback-observability": True,
    "bias-mitigation": True,
}


def write_descriptor(path: str | Path, replay: str, manifest: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "kind": "replay",
        "replay_path": replay,
        "manifest_path": manifest,
    }
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return path


def build_assets(root: str | Path) -> TestSuite:
    """Write the bundled suite, replays, manifests, and SUT descriptors under
    the given repository root; returns the suite for convenience."""
    root = Path(root)
    suite = les_demo_suite()
    write_suite(suite, root / "suites" / SUITE_ID)

    golden = golden_replay_entries(suite)
    replays = root / "replays"
    write_replay(replays / "golden.jsonl", golden)
    write_replay(
        replays / "tier1-6of10.jsonl",
        break_cases(golden, degraded_tier_cases(suite, Level.I, 4)))
    write_replay(
        replays / "tier1-5of10.jsonl",
        break_cases(golden, degraded_tier_cases(suite, Level.I, 5)))
    write_replay(
        replays / "tier4-9of10.jsonl",
        break_cases(golden, degraded_tier_cases(suite, Level.IV, 1)))
    write_replay(
        replays / "skip-tier2.jsonl",
        break_cases(golden,
                    [c.case_id for c in suite.cases_in_tier(Level.II)]))
    write_replay(replays / "identical-4of5.jsonl",
                 break_identical_samples(suite, golden, 1))
    write_replay(replays / "identical-3of5.jsonl",
                 break_identical_samples(suite, golden, 2))
    write_replay(replays / "linguistic-3of5.jsonl",
                 break_linguistic_paraphrases(suite, golden, 2))
    write_replay(replays / "no-trace.jsonl", strip_traces(golden))
    write_replay(replays / "no-explanation.jsonl",
                 strip_explanations(golden))

    manifests = root / "manifests"
    write_manifest(manifests / "full", ALL_DOC_KINDS, FULL_FEATURES)
    write_manifest(
        manifests / "no-ethics",
        [k for k in ALL_DOC_KINDS if k != "ethical-societal"],
        FULL_FEATURES)
    write_manifest(manifests / "basic", ["model-documentation"],
                   {"minimal-traceability": True})

    suts = root / "suts"
    full_manifest = "../manifests/full/manifest.json"
    descriptors = {
        "golden-replay": ("../replays/golden.jsonl", full_manifest),
        "tier1-6of10": ("../replays/tier1-6of10.jsonl", full_manifest),
        "tier1-5of10": ("../replays/tier1-5of10.jsonl", full_manifest),
        "tier4-9of10": ("../replays/tier4-9of10.jsonl", full_manifest),
        "skip-tier2": ("../replays/skip-tier2.jsonl", full_manifest),
        "identical-4of5": ("../replays/identical-4of5.jsonl", full_manifest),
        "identical-3of5": ("../replays/identical-3of5.jsonl", full_manifest),
        "linguistic-3of5": ("../replays/linguistic-3of5.jsonl",
                            full_manifest),
        "ladder-level1": ("../replays/golden.jsonl",
                          "../manifests/basic/manifest.json"),
        "ladder-level2": ("../replays/no-trace.jsonl", full_manifest),
        "ladder-level3": ("../replays/golden.jsonl",
                          "../manifests/no-ethics/manifest.json"),
        "ladder-level4": ("../replays/golden.jsonl", full_manifest),
        "no-explanation": ("../replays/no-explanation.jsonl", full_manifest),
    }
    for name, (replay, manifest) in descriptors.items():
        write_descriptor(suts / f"{name}.json", replay, manifest)
    return suite
