"""Regenerate the desk-scale personnel dataset under tests/data/desk/.

40 clerks (30 m / 10 f), 12 managers (10 m / 2 f) and 8 workers. With
Performance > 3.5, 12 male and 4 female clerks qualify. PregnancyCount is
positive exactly for women. The other attributes cycle through small
vocabularies so they carry little information about gender.

    python tests/data/make_desk.py
"""

import csv
from pathlib import Path

OUT = Path(__file__).parent / "desk"

MALE_CLERK_PERF = ["3.6", "3.8", "4.0", "4.1", "4.2", "4.4", "4.5", "4.6", "4.7", "4.8",
                   "4.9", "5.0", "1.0", "1.2", "1.5", "1.8", "2.0", "2.1", "2.3", "2.5",
                   "2.6", "2.8", "3.0", "3.1", "3.2", "3.3", "3.4", "3.5", "2.2", "2.9"]
FEMALE_CLERK_PERF = ["3.7", "1.4", "4.3", "2.0", "2.4", "4.6", "2.7", "3.0", "4.9", "3.5"]
MANAGER_PERF = ["4.1", "3.9", "4.4", "3.2", "4.8", "3.6", "4.0", "4.5", "3.3", "4.7",
                "4.2", "3.8"]
WORKER_PERF = ["3.1", "2.4", "4.0", "3.6", "2.9", "4.4", "3.3", "2.2"]

SURNAMES = ["rossi", "bianchi", "ferrari", "russo", "colombo"]
CITIZENSHIP = ["it", "fr", "de"]
FAMILY = ["single", "married", "widowed", "children"]
RACE = ["white", "black", "asian"]
DEPARTMENTS = ["sales", "it", "hr"]
YEARS = ["2015-03-01", "2016-03-01", "2017-03-01", "2018-03-01", "2019-03-01"]


def build():
    employees, persons = [], []
    m_perf, f_perf = iter(MALE_CLERK_PERF), iter(FEMALE_CLERK_PERF)
    for pid in range(1, 61):
        if pid <= 40:
            role = "clerk"
            female = pid % 4 == 0
            perf = next(f_perf) if female else next(m_perf)
        elif pid <= 52:
            role = "manager"
            female = pid in (44, 50)
            perf = MANAGER_PERF[pid - 41]
        else:
            role = "worker"
            female = pid % 2 == 0
            perf = WORKER_PERF[pid - 53]
        pregnancies = 1 + (pid // 4) % 3 if female else 0
        employees.append(["Acme", pid, role, YEARS[(pid * 2) % 5],
                          DEPARTMENTS[(pid + 1) % 3], perf])
        persons.append([pid, SURNAMES[pid % 5], "f" if female else "m",
                        CITIZENSHIP[pid % 3], FAMILY[(pid + pid // 4) % 4],
                        RACE[(pid // 3) % 3], pregnancies])
    return employees, persons


def write(name, header, rows):
    with open(OUT / name, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    employees, persons = build()
    write("EMPLOYEE.csv",
          ["InstName", "pID", "Role", "IniDate", "Department", "Performance"], employees)
    write("PERSON.csv",
          ["pID", "Surname", "Gender", "Citizenship", "FamSituation", "Race",
           "PregnancyCount"], persons)
