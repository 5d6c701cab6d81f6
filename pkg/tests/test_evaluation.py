"""
Tests des erreurs, contrôles de stabilité, diagnostics et métriques de classement
"""
import math

import numpy as np
import pytest

from conftest import make_design_pool, make_prepared_pool, make_raw_pool
from lib.errors import InvalidArgumentError
from lib.evaluation import (batch_bound, batch_stability_check, bound_Bn, curvature_at, curvature_range,
                            decay_experiment, decay_shortfalls, error_report, fisher_compatibility,
                            full_diagnostics, jaccard, leverage_diagnostics, loglog_slope, ranking_metrics,
                            relative_logit_error, selection_stability, stability_check, summarize_decay)
from lib.objective import hessian
from lib.selector import SelectionResult, greedy_select, prepare_pool, replay_design
from lib.synth import SynthConfig, gen_dataset
from lib.trainer import TrainConfig, fit, fit_batch, fit_full


def selection_of(pool, selected, strategy="mass"):
    return SelectionResult(pool_id=pool.pool_id, strategy=strategy, selected=list(selected),
                           gains=[], quads=[], logdet_trajectory=[], n=len(selected))


class TestRelativeLogitError:
    """Tests de relative_logit_error"""

    def test_delta_nul(self):
        """Δθ = 0: erreur nulle"""
        pool = make_design_pool(np.eye(3))
        assert relative_logit_error(np.ones(3), np.ones(3), pool) == 0.0

    def test_etendue_des_projections(self):
        """Projections (0.2, −0.1, 0.5): 0.6"""
        pool = make_design_pool(np.array([[0.2], [-0.1], [0.5]]))
        assert relative_logit_error(np.array([1.0]), np.array([0.0]), pool) == pytest.approx(0.6, abs=1e-15)

    def test_oracle_par_paires(self):
        """N = 50: égal au maximum sur toutes les paires"""
        rng = np.random.default_rng(0)
        pool = make_design_pool(rng.normal(size=(50, 4)))
        theta_hat, theta_star = rng.normal(size=4), rng.normal(size=4)
        delta = theta_hat - theta_star
        expected = max(abs((pool.phi[i] - pool.phi[j]) @ delta) for i in range(50) for j in range(50))
        assert relative_logit_error(theta_hat, theta_star, pool) == pytest.approx(expected, abs=1e-12)

    def test_dimension_incompatible(self):
        """Dimension incorrecte refusée"""
        with pytest.raises(InvalidArgumentError):
            relative_logit_error(np.ones(2), np.ones(3), make_design_pool(np.eye(3)))


class TestStability:
    """Tests de stability_check et batch_stability_check"""

    def test_sous_ensemble_egal_au_pool(self):
        """S = C: θ̂ = θ*, lhs = rhs = 0, vérifié"""
        pool = make_prepared_pool(np.random.default_rng(1), 3, 6, beta=0.5)
        config = TrainConfig(beta=0.5, gamma=0.1)
        theta_star = fit_full(pool, config).theta.theta
        theta_hat = fit(pool, range(6), config).theta.theta
        check = stability_check(theta_hat, theta_star, pool, range(6), 0.1, 0.5)
        assert check.lhs == pytest.approx(0.0, abs=1e-9)
        assert check.rhs == 0.0
        assert check.holds

    def test_instances_aleatoires(self):
        """100 instances d=8, N=32, n=4, γ=0.1: l'inégalité est toujours vérifiée"""
        rng = np.random.default_rng(2)
        config = TrainConfig(beta=1.0, gamma=0.1)
        for _ in range(100):
            pool = make_prepared_pool(rng, 8, 32, beta=1.0)
            subset = sorted(greedy_select(pool, 4, 0.1).selected)
            theta_star = fit_full(pool, config).theta.theta
            theta_hat = fit(pool, subset, config).theta.theta
            check = stability_check(theta_hat, theta_star, pool, subset, 0.1, 1.0)
            assert check.holds, (check.lhs, check.rhs)

    def test_lot(self):
        """Ajustements par lot: l'inégalité moyennée est vérifiée"""
        rng = np.random.default_rng(3)
        config = TrainConfig(beta=1.0, gamma=0.2)
        pools = [make_prepared_pool(rng, 4, 10, beta=1.0, pool_id=f"{i:03d}") for i in range(3)]
        subsets = [sorted(greedy_select(p, 3, 0.2).selected) for p in pools]
        theta_star = fit_batch(pools, [range(10)] * 3, config).theta.theta
        theta_hat = fit_batch(pools, subsets, config).theta.theta
        assert batch_stability_check(theta_hat, theta_star, pools, subsets, 0.2, 1.0).holds

    def test_gamma_invalide(self):
        """γ ≤ 0 refusé"""
        pool = make_design_pool(np.eye(2))
        with pytest.raises(InvalidArgumentError):
            stability_check(np.zeros(2), np.zeros(2), pool, [0], 0.0, 1.0)


class TestErrorReport:
    """Tests de error_report"""

    def test_sans_selection(self):
        """Sans sélection: erreurs calculées, stabilité absente"""
        pool = make_design_pool(np.array([[0.2], [-0.1], [0.5]]))
        report = error_report(pool, np.array([1.0]), np.array([0.0]), 0.1, 1.0)
        assert report.rel_logit_error == pytest.approx(0.6, abs=1e-15)
        assert report.theta_norm_gap == 1.0
        assert math.isnan(report.stability_lhs) and report.stability_holds is None

    def test_avec_selection(self):
        """Avec sélection: stabilité identique à stability_check, n et stratégie repris"""
        pool = make_prepared_pool(np.random.default_rng(4), 4, 12, beta=1.0)
        config = TrainConfig(beta=1.0, gamma=0.1)
        selection = greedy_select(pool, 3, 0.1)
        theta_star = fit_full(pool, config).theta.theta
        theta_hat = fit(pool, sorted(selection.selected), config).theta.theta
        report = error_report(pool, theta_hat, theta_star, 0.1, 1.0, selection)
        check = stability_check(theta_hat, theta_star, pool, sorted(selection.selected), 0.1, 1.0)
        assert (report.stability_lhs, report.stability_rhs) == (check.lhs, check.rhs)
        assert report.stability_holds
        assert report.n == 3 and report.strategy == "mass"
        assert report.rel_logit_error == relative_logit_error(theta_hat, theta_star, pool)


class TestLeverageDiagnostics:
    """Tests de leverage_diagnostics"""

    def test_vecteurs_nuls(self):
        """v = 0: leverages nuls, résidu télescopique nul, κ = 1"""
        pool = make_design_pool(np.zeros((4, 2)))
        report = leverage_diagnostics(pool, selection_of(pool, [0, 1]), 0.5)
        np.testing.assert_array_equal(report.leverages, np.zeros(4))
        assert report.telescoping_residual == pytest.approx(0.0, abs=1e-15)
        assert report.kappa_empirical == 1.0

    def test_un_candidat(self):
        """v=(1,0), γ=1, α₀=1, n=1: leverage final 0.5"""
        pool = make_design_pool([[1.0, 0.0]])
        report = leverage_diagnostics(pool, selection_of(pool, [0]), 1.0)
        assert report.leverages[0] == pytest.approx(0.5, abs=1e-15)
        assert report.x_series == [1.0]

    def test_instances_aleatoires(self):
        """Résidu télescopique ≤ 1e-9, x_k ≤ L_v/γ, κ fini ≥ 1"""
        rng = np.random.default_rng(4)
        for _ in range(20):
            pool = make_prepared_pool(rng, 5, 25, beta=1.0)
            report = leverage_diagnostics(pool, greedy_select(pool, 12, 0.1), 0.1)
            assert report.telescoping_residual <= 1e-9
            assert report.quad_cap_holds
            assert max(report.x_series) <= report.L_v0 / 0.1 * (1 + 1e-12)
            assert 1.0 <= report.kappa_empirical < math.inf
            assert report.logdet_cap_slack >= -1e-9

    def test_kappa_selection_aleatoire(self):
        """Sélection non gloutonne: κ ≥ 1"""
        pool = make_prepared_pool(np.random.default_rng(5), 4, 15, beta=1.0)
        report = leverage_diagnostics(pool, selection_of(pool, [3, 7, 11], "random"), 0.1)
        assert report.kappa_empirical >= 1.0

    def test_selection_incoherente(self):
        """Identifiant de pool différent ou index hors limites refusés"""
        pool = make_design_pool(np.eye(2))
        other = make_design_pool(np.eye(2), pool_id="autre")
        with pytest.raises(InvalidArgumentError):
            leverage_diagnostics(pool, selection_of(other, [0]), 0.1)
        with pytest.raises(InvalidArgumentError):
            leverage_diagnostics(pool, selection_of(pool, [5]), 0.1)


class TestBounds:
    """Tests de bound_Bn et batch_bound"""

    def test_bound_Bn_valeur(self):
        """(d=2, n=4, α₀=1, γ=1, L=1, κ=1, ρ=1, q=0.25): 4·2·0.5·log 3"""
        value = bound_Bn(2, 4, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25)
        assert value == pytest.approx(4 * 2 * 0.5 * math.log(3), rel=1e-14)
        assert value == pytest.approx(4.3944, abs=1e-4)

    def test_bound_Bn_decroit_en_n(self):
        """n → 4n: la borne décroît strictement"""
        assert bound_Bn(2, 16, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25) < bound_Bn(2, 4, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25)

    @pytest.mark.parametrize("args", [
        (2, 4, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0),
        (2, 0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25),
        (2, 4, 1.0, -1.0, 1.0, 1.0, 1.0, 0.25),
        (2, 4, 1.0, 1.0, 1.0, 1.0, 1.5, 0.25),
    ])
    def test_bound_Bn_arguments_invalides(self, args):
        """q_min = 0, n = 0, γ < 0 ou ρ > 1 refusés"""
        with pytest.raises(InvalidArgumentError):
            bound_Bn(*args)

    def test_batch_bound_substitution(self):
        """(d=4, δ=0.1, k=1, c_min=0.01, γ=1): valeur finie positive"""
        d, delta, k, c_min, gamma = 4, 0.1, 1, 0.01, 1.0
        base = 1 - c_min * k / gamma
        expected = math.sqrt(d / 4 * math.log((1 / delta + k * c_min / gamma) / (base ** (1 / d) * delta))) + 2
        value = batch_bound(d, delta, k, c_min, gamma)
        assert value == pytest.approx(expected, rel=1e-14)
        assert math.isfinite(value) and value > 0

    def test_batch_bound_non_definie(self):
        """c_min·k ≥ γ: None"""
        assert batch_bound(4, 0.1, 10, 0.2, 1.0) is None
        assert batch_bound(4, 0.1, 5, 0.2, 1.0) is None

    def test_batch_bound_constante_additive(self):
        """γ = 1: la borne dépasse toujours 2√γ = 2"""
        assert batch_bound(4, 0.5, 1, 1e-12, 1.0) >= 2.0

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.5])
    def test_batch_bound_delta_invalide(self, delta):
        """δ hors de (0, 1) refusé"""
        with pytest.raises(InvalidArgumentError):
            batch_bound(4, delta, 1, 0.01, 1.0)


class TestDiagnostics:
    """Tests de curvature_range, fisher_compatibility et full_diagnostics"""

    def test_courbure_point_unique(self):
        """Un seul point: c_min = c_max = β²(1−σ(Z_C))"""
        pool = make_prepared_pool(np.random.default_rng(6), 3, 8, beta=0.5)
        theta = np.array([0.1, -0.2, 0.3])
        c_min, c_max = curvature_range(pool, [theta], 0.5)
        assert c_min == c_max == curvature_at(pool, theta, 0.5)
        assert 0 < c_min <= 0.25

    def test_courbure_encadree(self):
        """c_min ≤ courbure aux points de contrôle ≤ c_max"""
        rng = np.random.default_rng(7)
        pool = make_prepared_pool(rng, 3, 8, beta=1.0)
        points = [rng.normal(size=3) for _ in range(3)]
        c_min, c_max = curvature_range(pool, points, 1.0)
        for point in points:
            assert c_min <= curvature_at(pool, point, 1.0) <= c_max

    def test_fisher_valeur_propre_generalisee(self):
        """Σ_n − ρH_n est semi-définie positive et singulière"""
        rng = np.random.default_rng(8)
        pool = make_prepared_pool(rng, 4, 12, beta=1.0)
        selection = greedy_select(pool, 5, 0.1)
        theta_star = rng.normal(size=4) * 0.3
        rho = fisher_compatibility(pool, selection, theta_star, 0.1, 1.0)
        _, _, _, state = replay_design(pool, selection.selected, 0.1)
        sigma = 0.1 * np.eye(4) + hessian(pool, theta_star, sorted(selection.selected), 1.0)
        eigenvalues = np.linalg.eigvalsh(sigma - rho * state.h)
        assert rho > 0
        assert eigenvalues.min() >= -1e-9
        assert eigenvalues.min() <= 1e-8

    def test_full_diagnostics_pool_degenere(self):
        """L_v = 0: borne nulle"""
        pool = make_design_pool(np.zeros((3, 2)))
        report = full_diagnostics(pool, selection_of(pool, [0, 1]), np.zeros(2), np.zeros(2), 0.1, 1.0)
        assert report.bound_Bn_value == 0.0
        assert report.max_centered_leverage == 0.0
        assert report.bound_holds

    def test_full_diagnostics_valeurs(self):
        """Diagnostics complets finis sur une instance aléatoire"""
        rng = np.random.default_rng(9)
        pool = make_prepared_pool(rng, 4, 16, beta=1.0)
        config = TrainConfig(beta=1.0, gamma=0.1)
        selection = greedy_select(pool, 6, 0.1)
        theta_star = fit_full(pool, config).theta.theta
        theta_hat = fit(pool, sorted(selection.selected), config).theta.theta
        report = full_diagnostics(pool, selection, theta_star, theta_hat, 0.1, 1.0)
        assert report.R_theta == pytest.approx(max(np.linalg.norm(theta_star), np.linalg.norm(theta_hat)))
        assert report.rho_empirical > 0
        assert 0 < report.c_min <= report.c_max <= 1.0
        assert math.isfinite(report.bound_Bn_value) and report.bound_Bn_value > 0
        assert report.max_centered_leverage >= 0
        assert isinstance(report.bound_holds, bool)

    def test_levier_centre_et_plafonds_instances_aleatoires(self):
        """100 instances d=8, N=32, n=4, γ=0.1: levier centré ≤ B_n, x_k ≤ L_v⁰/γ, gain ≤ d·log(1 + α₀nL_v⁰/(γd))"""
        rng = np.random.default_rng(10)
        config = TrainConfig(beta=1.0, gamma=0.1)
        for _ in range(100):
            pool = make_prepared_pool(rng, 8, 32, beta=1.0)
            selection = greedy_select(pool, 4, 0.1)
            theta_star = fit_full(pool, config).theta.theta
            theta_hat = fit(pool, sorted(selection.selected), config).theta.theta
            report = full_diagnostics(pool, selection, theta_star, theta_hat, 0.1, 1.0)
            assert report.bound_holds, (report.max_centered_leverage, report.bound_Bn_value)
            assert report.quad_cap_holds
            assert report.logdet_cap_slack >= -1e-9


class TestRankingMetrics:
    """Tests de ranking_metrics"""

    def test_rang_un(self):
        """Préférée en tête: R@1 = NDCG@1 = MRR = 1"""
        pool = make_design_pool(np.array([[-1.0, 0.0], [0.0, -2.0]]))
        metrics = ranking_metrics(np.array([1.0, 1.0]), pool, [1], 0.1)
        assert metrics["rank"] == 1
        assert metrics["recall_at_1"] == 1.0
        assert metrics["ndcg_at_1"] == 1.0
        assert metrics["mrr"] == 1.0

    def test_rang_deux(self):
        """Préférée au rang 2: R@1 = 0, R@3 = 1, NDCG@3 = 1/log₂3, MRR = 0.5"""
        pool = make_design_pool(np.array([[1.0, 0.0], [0.0, -2.0], [-1.0, -1.0]]))
        metrics = ranking_metrics(np.array([1.0, 1.0]), pool, [1, 3], 0.1)
        assert metrics["rank"] == 2
        assert metrics["recall_at_1"] == 0.0
        assert metrics["ndcg_at_1"] == 0.0
        assert metrics["recall_at_3"] == 1.0
        assert metrics["ndcg_at_3"] == pytest.approx(0.6309, abs=1e-4)
        assert metrics["mrr"] == 0.5

    def test_egalite_comptee_contre_la_preferee(self):
        """Score égal à celui de la préférée: rang 2"""
        pool = make_design_pool(np.array([[0.0, 0.0], [-1.0, 0.0]]))
        assert ranking_metrics(np.array([1.0, 0.0]), pool, [1], 0.1)["rank"] == 2

    def test_oracle_tri(self):
        """Coïncide avec un tri complet des N+1 items"""
        rng = np.random.default_rng(10)
        for _ in range(20):
            raw = make_raw_pool(rng, 3, 9)
            pool = prepare_pool(raw, np.zeros(3), 0.1)
            theta = rng.normal(size=3)
            items = [(-(raw.preferred_features @ theta), 1, "preferred")]
            items += [(-(f @ theta), 0, i) for i, f in enumerate(raw.candidate_features)]
            rank = [label for *_, label in sorted(items, key=lambda t: (t[0], t[1]))].index("preferred") + 1
            metrics = ranking_metrics(theta, pool, [1, 5], 0.1)
            assert metrics["rank"] == rank
            assert metrics["recall_at_5"] == (1.0 if rank <= 5 else 0.0)

    def test_marge(self):
        """margin = moyenne de −β(φᵀθ + b)"""
        pool = make_design_pool(np.array([[1.0], [3.0]]))
        pool.b = np.array([0.5, -0.5])
        assert ranking_metrics(np.array([2.0]), pool, [1], 0.5)["margin"] == pytest.approx(-2.0)

    @pytest.mark.parametrize("ks", [[], [0], [4]])
    def test_ks_invalides(self, ks):
        """k hors de [1, N+1] ou liste vide refusés"""
        with pytest.raises(InvalidArgumentError):
            ranking_metrics(np.zeros(2), make_design_pool(np.eye(2, 2)[:2]), ks, 0.1)


class TestSelectionStability:
    """Tests de jaccard et selection_stability"""

    def test_jaccard(self):
        """Ensembles identiques: 1; {1,2,3} contre {2,3,4}: 0.5"""
        assert jaccard([1, 2, 3], [3, 2, 1]) == 1.0
        assert jaccard([1, 2, 3], [2, 3, 4]) == 0.5
        assert jaccard([], []) == 1.0

    def test_meme_politique(self):
        """θ_a = θ_b: sélections identiques, rétention 1"""
        raw = make_raw_pool(np.random.default_rng(11), 4, 12)
        theta = np.full(4, 0.2)
        result = selection_stability(raw, theta, theta, 4, 1.0, 0.1)
        assert result["exact_match"] == 1.0
        assert result["jaccard"] == 1.0
        assert result["top1_match"] == 1.0
        assert result["top3_match"] == 1.0
        assert result["objective_retention"] == pytest.approx(1.0)

    def test_retention_bornee(self):
        """Politiques différentes: jaccard dans [0, 1], rétention ≤ 1/(1−1/e)"""
        rng = np.random.default_rng(12)
        raw = make_raw_pool(rng, 4, 12)
        result = selection_stability(raw, np.zeros(4), rng.normal(size=4), 4, 1.0, 0.1)
        assert 0.0 <= result["jaccard"] <= 1.0
        assert 0.0 < result["objective_retention"] <= 1 / (1 - 1 / math.e) + 1e-9


class TestDecayExperiment:
    """Tests de decay_experiment, loglog_slope et summarize_decay"""

    def test_n_egal_N(self):
        """n_grid = [N]: erreurs ≤ 1e-6"""
        rng = np.random.default_rng(13)
        dataset = [make_raw_pool(rng, 3, 8, pool_id=f"{i:03d}") for i in range(2)]
        rows, summary = decay_experiment(dataset, ["mass", "random"], [8], [0, 1], TrainConfig(beta=0.5, gamma=0.1))
        assert len(rows) == 2 * 2 * 2
        for row in rows:
            assert row["error"] == ""
            assert row["n_selected"] == 8
            assert row["rel_logit_error"] <= 1e-6
            assert row["converged"]
            assert row["stability_holds"] is True
        assert {s["kind"] for s in summary} >= {"median", "stderr", "slope", "strictly_decreasing", "win_fraction"}

    def test_pool_de_doublons(self):
        """σ = 0, c = 1: sélection 0..n−1 à gains nuls, erreurs ≤ 1e-6 pour toutes les stratégies"""
        dataset = gen_dataset(SynthConfig(dim=4, pools=1, candidates_per_pool=20, clusters=1,
                                          cluster_noise=0.0, seed=3))
        pool = prepare_pool(dataset[0], np.zeros(4), 0.1)
        selection = greedy_select(pool, 3, 0.1)
        assert selection.selected == [0, 1, 2]
        assert selection.gains == [0.0, 0.0, 0.0]
        config = TrainConfig(beta=0.1, gamma=0.1)
        theta_hat = fit(pool, selection.selected, config).theta.theta
        theta_star = fit_full(pool, config).theta.theta
        assert relative_logit_error(theta_hat, theta_star, pool) <= 1e-6
        rows, _ = decay_experiment(dataset, ["mass", "random"], [2, 4], [0], config)
        for row in rows:
            assert row["error"] == ""
            assert row["rel_logit_error"] <= 1e-6

    def test_graines_appariees_deterministes(self):
        """Deux exécutions: lignes identiques; graines distinctes pour random"""
        rng = np.random.default_rng(14)
        dataset = [make_raw_pool(rng, 3, 12, pool_id="000")]
        config = TrainConfig(beta=1.0, gamma=0.1)
        first, _ = decay_experiment(dataset, ["mass", "random"], [2, 4], [0, 1, 2], config)
        second, _ = decay_experiment(dataset, ["mass", "random"], [2, 4], [0, 1, 2], config)
        assert first == second
        mass_errors = {r["rel_logit_error"] for r in first if r["strategy"] == "mass" and r["n"] == 2}
        assert len(mass_errors) == 1

    @pytest.mark.parametrize("strategies,n_grid", [
        ([], [2]), (["greedy"], [2]), (["mass"], []), (["mass"], [4, 2]), (["mass"], [0, 2]),
    ])
    def test_grille_invalide(self, strategies, n_grid):
        """Stratégie inconnue ou grille vide, non croissante ou invalide refusée"""
        dataset = [make_raw_pool(np.random.default_rng(15), 2, 4)]
        with pytest.raises(InvalidArgumentError):
            decay_experiment(dataset, strategies, n_grid, [0], TrainConfig())

    def test_pente_loglog(self):
        """Médianes en 1/n: pente −1"""
        assert loglog_slope([4, 8, 16], [0.25, 0.125, 0.0625]) == pytest.approx(-1.0, abs=1e-12)
        assert math.isnan(loglog_slope([4], [0.25]))

    def test_resume_tableau_construit(self):
        """Médianes, pente, décroissance stricte et fraction de victoires sur un tableau construit"""
        rows = []
        for n in (4, 8, 16):
            for seed, factor in enumerate((1.0, 2.0, 0.5)):
                rows.append({"seed": seed, "pool_id": "000", "strategy": "mass", "n": n,
                             "rel_logit_error": factor / n, "error": ""})
                rows.append({"seed": seed, "pool_id": "000", "strategy": "random", "n": n,
                             "rel_logit_error": 4 * factor / n, "error": ""})
        summary = summarize_decay(rows)
        lookup = {(s["kind"], s["strategy"], s["n"]): s for s in summary}
        assert lookup[("median", "mass", 8)]["value"] == pytest.approx(1 / 8)
        assert lookup[("median", "mass", 8)]["count"] == 3
        assert lookup[("slope", "mass", "all")]["value"] == pytest.approx(-1.0, abs=1e-12)
        assert lookup[("strictly_decreasing", "random", "all")]["value"] == 1.0
        assert lookup[("win_fraction", "mass_vs_random", 4)]["value"] == 1.0

    def test_resume_lignes_en_erreur_ignorees(self):
        """Les lignes en erreur ne comptent pas dans les médianes"""
        rows = [{"seed": 0, "pool_id": "000", "strategy": "mass", "n": 2, "rel_logit_error": 0.5, "error": ""},
                {"seed": 1, "pool_id": "000", "strategy": "mass", "n": 2, "rel_logit_error": math.nan,
                 "error": "échec"}]
        lookup = {(s["kind"], s["n"]): s for s in summarize_decay(rows)}
        assert lookup[("median", 2)]["value"] == 0.5
        assert lookup[("median", 2)]["count"] == 1

    def test_ecarts_absents(self):
        """mass en 1/n, random quatre fois plus haut: aucun écart"""
        rows = []
        for n in (4, 8, 16):
            for seed in range(3):
                rows.append({"seed": seed, "pool_id": "000", "strategy": "mass", "n": n,
                             "rel_logit_error": 1.0 / n, "error": ""})
                rows.append({"seed": seed, "pool_id": "000", "strategy": "random", "n": n,
                             "rel_logit_error": 4.0 / n, "error": ""})
        assert decay_shortfalls(summarize_decay(rows)) == []

    def test_ecarts_constates(self):
        """mass croissante et au-dessus de random: les quatre écarts sont signalés"""
        rows = []
        for n in (4, 8, 16):
            for seed in range(3):
                rows.append({"seed": seed, "pool_id": "000", "strategy": "mass", "n": n,
                             "rel_logit_error": n / 10.0, "error": ""})
                rows.append({"seed": seed, "pool_id": "000", "strategy": "random", "n": n,
                             "rel_logit_error": 1.0 / n, "error": ""})
        shortfalls = decay_shortfalls(summarize_decay(rows))
        assert any("non strictement décroissante" in s for s in shortfalls)
        assert any("pente" in s for s in shortfalls)
        assert any(s.startswith("n=8: médiane mass") for s in shortfalls)
        assert any("0% des paires" in s for s in shortfalls)

    def test_ecarts_sans_mass(self):
        """Résumé sans mass: aucun écart"""
        rows = [{"seed": 0, "pool_id": "000", "strategy": "random", "n": n, "rel_logit_error": float(n),
                 "error": ""} for n in (2, 4)]
        assert decay_shortfalls(summarize_decay(rows)) == []

    @pytest.mark.xfail(strict=False, reason="à β = 0.1, mass reste au-dessus de random sur les pools groupés "
                                            "(écart mesuré documenté dans DESIGN.md)")
    def test_tendance_mass_contre_random(self):
        """Échelle réduite (d=8, 60 items, c=10, 12 graines): mass décroît et bat random"""
        config = TrainConfig(beta=0.1, gamma=0.1)
        rows = []
        for seed in range(12):
            dataset = gen_dataset(SynthConfig(dim=8, pools=1, candidates_per_pool=60, clusters=10, seed=seed))
            seed_rows, _ = decay_experiment(dataset, ["mass", "random"], [4, 8, 16], [seed], config)
            rows += seed_rows
        assert decay_shortfalls(summarize_decay(rows)) == []
