# Copyright 2026 The horizon-pmp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import horizon_pmp as hp


def test_builtins_listed():
    assert hp.builtin_names() == ["scalar-exp", "halkin", "lq-discounted", "monotone-growth"]
    info = hp.describe("halkin")
    assert info["state_dim"] == 1
    assert info["control_dim"] == 1


def test_expression_round_trip():
    e = hp.parse("exp(-t)*(x1 - 0.5*u1^2)", ["t", "x1", "u1"])
    assert e.eval([0.0, 1.0, 1.0]) == pytest.approx(0.5)
    value, deriv = e.eval_dual([0.0, 1.0, 1.0], 2)
    assert value == pytest.approx(0.5)
    assert deriv == pytest.approx(-1.0)
    assert hp.parse(e.print(), ["t", "x1", "u1"]) == e
    with pytest.raises(hp.ParseError):
        hp.parse("x1 +", ["t", "x1", "u1"])


def test_halkin_cauchy_adjoint():
    acc = hp.accumulate("halkin")
    assert acc["verdict"] == "converged"
    assert acc["limit"][0] == pytest.approx(-1.0, abs=1e-6)
    adj = hp.cauchy_adjoint("halkin")
    assert adj["lambda"] == pytest.approx(0.5, abs=1e-8)
    assert max(abs(v[0] + 0.5) for v in adj["values"]) < 1e-6
    assert adj["product_identity"] < 1e-6


def test_battery_separates_conditions():
    rep = hp.battery("halkin")
    assert rep["verdicts"]["trans"] == "fails"
    assert rep["verdicts"]["lim"] == "holds"
    assert rep["summary"].startswith("trans=fails")


def test_dominance_fit():
    t = [0.25 * k for k in range(161)]
    alpha, beta, holds = hp.fit_dominance(t, [2.0 * math.exp(-0.5 * s) for s in t])
    assert holds
    assert alpha == pytest.approx(0.5, rel=1e-9)
    assert beta == pytest.approx(2.0, rel=1e-9)


def test_cli_entry(tmp_path):
    code, out, _ = hp.run_cli(["list"])
    assert code == 0
    assert "monotone-growth" in out
    code, _, err = hp.run_cli(["list", "--bogus"])
    assert code == 1
    assert "--bogus" in err
