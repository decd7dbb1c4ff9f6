# Copyright 2026 The vflr Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the bundled CSV fixtures. Output is committed; rerun only when
the fixture definition changes."""

import csv
import random

import numpy as np

# Per-class feature means / standard deviations of the classic iris data.
IRIS = {
    "setosa": ([5.006, 3.428, 1.462, 0.246], [0.352, 0.379, 0.174, 0.105]),
    "versicolor": ([5.936, 2.770, 4.260, 1.326], [0.516, 0.314, 0.470, 0.198]),
    "virginica": ([6.588, 2.974, 5.552, 2.026], [0.636, 0.322, 0.552, 0.275]),
}


def iris_like(path, seed=7):
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sepal_length", "sepal_width", "petal_length", "petal_width", "species"])
        for name, (mu, sd) in IRIS.items():
            for row in rng.normal(mu, sd, size=(50, 4)):
                w.writerow([f"{max(v, 0.1):.1f}" for v in row] + [name])


GIVEN = ["anna", "ben", "carla", "dmitri", "elena", "farid", "grace", "hiro",
         "ines", "jonas", "kira", "liam", "maya", "noah", "olga", "pavel"]
SURNAME = ["abbott", "baker", "chen", "diaz", "evans", "fischer", "garcia",
           "hughes", "ito", "jensen", "khan", "lopez", "muller", "novak"]


def parties(path_a, path_b, rows=80, shared=64, seed=11):
    rnd = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    people = set()
    while len(people) < rows + (rows - shared):
        people.add((rnd.choice(GIVEN), rnd.choice(SURNAME),
                    f"{rnd.randint(1950, 2000)}-{rnd.randint(1, 12):02d}-{rnd.randint(1, 28):02d}"))
    people = sorted(people)
    rnd.shuffle(people)
    a_people = people[:rows]
    b_people = people[:shared] + people[rows:]
    x = np_rng.normal(size=(len(people), 4))
    y = (x @ np.array([1.5, -1.0, 1.0, -0.5]) + 0.5 * np_rng.normal(size=len(people))) > 0

    order_a = list(range(rows))
    order_b = list(range(shared)) + list(range(rows, len(people)))
    rnd.shuffle(order_a)
    rnd.shuffle(order_b)
    with open(path_a, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["given_name", "surname", "dob", "a1", "a2", "label"])
        for i in order_a:
            g, s, d = people[i]
            w.writerow([g, s, d, f"{x[i, 0]:.4f}", f"{x[i, 1]:.4f}", int(y[i])])
    with open(path_b, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["given_name", "surname", "dob", "b1", "b2"])
        for i in order_b:
            g, s, d = people[i]
            w.writerow([g, s, d, f"{x[i, 2]:.4f}", f"{x[i, 3]:.4f}"])


if __name__ == "__main__":
    iris_like("iris_like.csv")
    parties("party_a.csv", "party_b.csv")
