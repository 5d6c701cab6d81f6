#!/bin/env python3
"""
Sélection D-optimale de négatifs pour DPO multi-négatifs.

Sous-commandes:
    synth   génère un fichier de pools synthétiques (JSONL)
    select  sélectionne n négatifs par pool (mass, mass-reselect, random, softmax, topk, full, brute)
    train   ajuste θ sur les sous-ensembles sélectionnés, le pool complet ou en lot
    eval    calcule erreurs, contrôles de stabilité, diagnostics et métriques de classement (CSV)
    bench   exécute l'expérience de décroissance de l'erreur décrite par un fichier JSON

Exemples:
    python massDpo.py synth --d 16 --pools 100 --candidates 64 --seed 7 --out pools.jsonl
    python massDpo.py select --in pools.jsonl --out sel.jsonl --n 3 --strategy mass
    python massDpo.py train --pools pools.jsonl --selection sel.jsonl --out theta_hat.jsonl
    python massDpo.py train --pools pools.jsonl --full-pool --out theta_star.jsonl
    python massDpo.py eval --pools pools.jsonl --selection sel.jsonl --theta theta_hat.jsonl \\
        --theta-ref theta_star.jsonl --metrics rel,stability,rank --out report.csv
    python massDpo.py bench --config bench/default_config.json --out decay.csv
"""

import os
import sys
import argparse
import logging

# Add the parent directory to the path to import the lib module
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lib.config import Config
from lib.errors import MassDpoError
from lib.pipeline import METRIC_GROUPS, MassPipeline
from lib.selector import STRATEGIES
from lib.synth import PREFERRED_RULES, SynthConfig
from lib.trainer import TrainConfig


def setup_logging(log_level: str) -> None:
    """Configure le système de logging."""
    level = getattr(logging, log_level.upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        force=True
    )


def common_parser(suppress_defaults: bool = False) -> argparse.ArgumentParser:
    """
    Options communes. Les copies attachées aux sous-commandes ont des défauts
    supprimés: une option donnée avant la sous-commande n'y est pas écrasée.
    """
    def default(value):
        return argparse.SUPPRESS if suppress_defaults else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '-l', '--log-level',
        dest='log_level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
        default=default('WARNING'),
        help="Niveau de journalisation."
    )
    common.add_argument(
        '--config-file',
        dest='config_file',
        default=default(None),
        help="Fichier de configuration JSON (défaut: ~/.massdpo_config.json)"
    )
    common.add_argument(
        '-S', '--save-config',
        dest='save_config',
        action='store_true',
        default=default(False),
        help="Sauvegarde les paramètres effectifs pour une utilisation future"
    )
    return common


def build_parser(config: Config) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Sélection active D-optimale de négatifs pour DPO multi-négatifs",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[common_parser()]
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    sub_common = common_parser(suppress_defaults=True)

    def add_command(name, help_text):
        return subparsers.add_parser(name, help=help_text, parents=[sub_common],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    def add_workers(sub):
        sub.add_argument('-j', '--workers', dest='workers', type=int, default=config.get("workers"),
                         help="Nombre de processus pour le traitement par pool")

    def add_beta_gamma(sub):
        sub.add_argument('--beta', dest='beta', type=float, default=config.get("beta"),
                         help="Échelle DPO β")
        sub.add_argument('--gamma', dest='gamma', type=float, default=config.get("gamma"),
                         help="Ridge γ (matrice d'information et objectif)")

    # synth
    synth = add_command('synth', "Génère des pools synthétiques")
    synth.add_argument('--d', dest='dim', type=int, default=config.get("dim"), help="Dimension des caractéristiques")
    synth.add_argument('--pools', dest='pools', type=int, default=config.get("pools"), help="Nombre de pools")
    synth.add_argument('--candidates', dest='candidates', type=int, default=config.get("candidates"),
                       help="Nombre d'items par pool (réponse préférée comprise)")
    synth.add_argument('--clusters', dest='clusters', type=int, default=config.get("clusters"),
                       help="Nombre de groupes de quasi-doublons")
    synth.add_argument('--cluster-noise', dest='cluster_noise', type=float, default=config.get("cluster_noise"),
                       help="Écart-type du bruit autour des centres")
    synth.add_argument('--feature-scale', dest='feature_scale', type=float, default=config.get("feature_scale"),
                       help="Échelle des centres")
    synth.add_argument('--preferred-rule', dest='preferred_rule', choices=PREFERRED_RULES,
                       default=config.get("preferred_rule"), help="Choix de la réponse préférée")
    synth.add_argument('--seed', dest='seed', type=int, default=config.get("seed"), help="Graine maîtresse")
    synth.add_argument('--out', dest='out', required=True, help="Fichier de pools en sortie")
    add_workers(synth)

    # select
    select = add_command('select', "Sélectionne les négatifs de chaque pool")
    select.add_argument('--in', dest='input', required=True, help="Fichier de pools")
    select.add_argument('--out', dest='out', required=True, help="Fichier de sélections en sortie")
    select.add_argument('--n', dest='n', type=int, default=config.get("n"), help="Nombre de négatifs")
    add_beta_gamma(select)
    select.add_argument('--strategy', dest='strategy', choices=STRATEGIES, default=config.get("strategy"),
                        help="Stratégie de sélection")
    select.add_argument('--criterion', dest='criterion', choices=["quad", "logdet"], default=config.get("criterion"),
                        help="Critère glouton (forme quadratique ou log-det direct)")
    select.add_argument('--theta0', dest='theta0', default="zero",
                        help="Politique de prétraitement: 'zero' ou fichier theta")
    select.add_argument('--seed', dest='seed', type=int, default=config.get("seed"),
                        help="Graine maîtresse des stratégies stochastiques")
    select.add_argument('--brute-force-limit', dest='brute_force_limit', type=int,
                        default=config.get("brute_force_limit"),
                        help="Nombre maximal de sous-ensembles énumérés par la stratégie brute")
    add_workers(select)

    # train
    train = add_command('train', "Ajuste θ par Newton amorti")
    train.add_argument('--pools', dest='pools_path', required=True, help="Fichier de pools")
    source = train.add_mutually_exclusive_group(required=True)
    source.add_argument('--selection', dest='selection', help="Fichier de sélections")
    source.add_argument('--full-pool', dest='full_pool', action='store_true', help="Ajuste sur tous les candidats")
    train.add_argument('--batch', dest='batch', action='store_true', help="Un seul θ pour l'objectif moyenné")
    add_beta_gamma(train)
    train.add_argument('--tol', dest='tol', type=float, default=config.get("tol"), help="Seuil sur ‖∇F‖")
    train.add_argument('--max-iter', dest='max_iter', type=int, default=config.get("max_iter"),
                       help="Nombre maximal d'itérations de Newton")
    train.add_argument('--out', dest='out', required=True, help="Fichier theta en sortie")
    add_workers(train)

    # eval
    evaluate = add_command('eval', "Calcule les métriques d'évaluation")
    evaluate.add_argument('--pools', dest='pools_path', required=True, help="Fichier de pools")
    evaluate.add_argument('--selection', dest='selection', default=None, help="Fichier de sélections")
    evaluate.add_argument('--theta', dest='theta', default=None, help="Fichier theta (θ̂)")
    evaluate.add_argument('--theta-ref', dest='theta_ref', default=None, help="Fichier theta de référence (θ*)")
    evaluate.add_argument('--theta0', dest='theta0', default="zero",
                          help="Politique de prétraitement: 'zero' ou fichier theta")
    evaluate.add_argument('--metrics', dest='metrics', default="rel,stability,leverage,rank,diag",
                          help=f"Groupes de métriques parmi {','.join(METRIC_GROUPS)}")
    evaluate.add_argument('--ks', dest='ks', default=config.get("ks"), help="Valeurs de k pour Recall@k et NDCG@k")
    evaluate.add_argument('--delta', dest='delta', type=float, default=config.get("delta"),
                          help="Niveau de confiance δ de la borne de lot (groupe diag)")
    add_beta_gamma(evaluate)
    evaluate.add_argument('--out', dest='out', required=True, help="Rapport CSV en sortie")
    add_workers(evaluate)

    # bench
    bench = add_command('bench', "Expérience de décroissance de l'erreur")
    bench.add_argument('--config', dest='bench_config', required=True, help="Configuration JSON du benchmark")
    bench.add_argument('--out', dest='out', required=True, help="Tableau CSV en sortie")
    bench.add_argument('--summary-out', dest='summary_out', default=None,
                       help="Résumé CSV (défaut: <out>_summary.csv)")
    add_workers(bench)

    return parser


def run(args, config: Config) -> int:
    pipeline = MassPipeline(config, workers=args.workers)

    if args.command == 'synth':
        synth_config = SynthConfig(
            dim=args.dim,
            pools=args.pools,
            candidates_per_pool=args.candidates,
            clusters=args.clusters,
            cluster_noise=args.cluster_noise,
            feature_scale=args.feature_scale,
            preferred_rule=args.preferred_rule,
            seed=args.seed,
        )
        count = pipeline.run_synth(synth_config, args.out)
        logging.info(f"{count} pools générés dans {args.out}")

    elif args.command == 'select':
        pipeline.run_select(args.input, args.out, args.strategy, args.n, args.beta, args.gamma,
                            theta0=args.theta0, seed=args.seed, criterion=args.criterion)

    elif args.command == 'train':
        train_config = TrainConfig(beta=args.beta, gamma=args.gamma, tol=args.tol, max_iter=args.max_iter)
        pipeline.run_train(args.pools_path, args.out, train_config, selection_path=args.selection,
                           full_pool=args.full_pool, batch=args.batch)

    elif args.command == 'eval':
        metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
        pipeline.run_eval(args.pools_path, args.out, metrics, args.ks, args.beta, args.gamma,
                          selection_path=args.selection, theta_path=args.theta,
                          theta_ref_path=args.theta_ref, theta0=args.theta0, delta=args.delta)

    elif args.command == 'bench':
        rows, _ = pipeline.run_bench(args.bench_config, args.out, args.summary_out)
        logging.info(f"{len(rows)} lignes de benchmark écrites dans {args.out}")

    return 0


def main(argv=None) -> int:
    # sans abréviation: "bench --config" ne doit pas être pris pour --config-file
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument('--config-file', dest='config_file', default=None)
    known, _ = pre.parse_known_args(argv)
    config = Config(known.config_file)

    parser = build_parser(config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    setup_logging(args.log_level)
    logging.info(f"Log level set to {args.log_level}")

    if args.save_config:
        config.set_from_args(args)
        config.save()

    try:
        return run(args, config)
    except KeyboardInterrupt:
        logging.warning("Traitement interrompu par l'utilisateur")
        return 130
    except (MassDpoError, OSError) as e:
        logging.error(f"Erreur: {e}")
        return 1
    except Exception as e:
        logging.exception(f"Erreur inattendue: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
