#!/bin/env python3
import os
import json
import logging


class Config:
    """
    Classe pour charger, sauvegarder et accéder à la configuration de massDpo.
    Gère la persistance des paramètres dans un fichier JSON.
    """
    # Valeurs par défaut pour chaque paramètre de configuration
    DEFAULTS = {
        "beta": 0.1,
        "gamma": 0.1,
        "n": 3,
        "strategy": "mass",
        "criterion": "quad",
        "tol": 1e-10,
        "max_iter": 200,
        "brute_force_limit": 2_000_000,
        "workers": 1,
        "ks": "1,3",
        "delta": 0.05,
        "seed": 0,
        "dim": 16,
        "pools": 10,
        "candidates": 64,
        "clusters": 8,
        "cluster_noise": 0.05,
        "feature_scale": 1.0,
        "preferred_rule": "pl-sample",
    }

    # attribut argparse -> clé de configuration
    ARG_KEYS = {
        "beta": "beta",
        "gamma": "gamma",
        "n": "n",
        "strategy": "strategy",
        "criterion": "criterion",
        "tol": "tol",
        "max_iter": "max_iter",
        "brute_force_limit": "brute_force_limit",
        "workers": "workers",
        "ks": "ks",
        "delta": "delta",
        "seed": "seed",
        "dim": "dim",
        "pools": "pools",
        "candidates": "candidates",
        "clusters": "clusters",
        "cluster_noise": "cluster_noise",
        "feature_scale": "feature_scale",
        "preferred_rule": "preferred_rule",
    }

    def __init__(self, config_file=None):
        """
        Initialise la configuration à partir d'un fichier.
        Si le fichier n'est pas spécifié, utilise le chemin par défaut ~/.massdpo_config.json
        """
        self.config_file = config_file or os.path.expanduser("~/.massdpo_config.json")
        self._config = {}
        self.load()

    def load(self):
        """
        Charge la configuration depuis le fichier.
        Si le fichier n'existe pas ou est invalide, utilise les valeurs par défaut.
        """
        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, "r") as f:
                    loaded = json.load(f)
                if not isinstance(loaded, dict):
                    raise ValueError("le fichier ne contient pas un objet JSON")
                unknown = sorted(set(loaded) - set(self.DEFAULTS))
                if unknown:
                    logging.warning(f"Clés de configuration inconnues ignorées: {', '.join(unknown)}")
                self._config = {k: v for k, v in loaded.items() if k in self.DEFAULTS}
                logging.info(f"Configuration chargée depuis {self.config_file}")
            except Exception as e:
                logging.warning(f"Erreur lors du chargement de la configuration: {e}")
                self._config = {}
        else:
            logging.info(f"Fichier de configuration {self.config_file} inexistant, utilisation des valeurs par défaut")
            self._config = {}

    def save(self):
        """
        Sauvegarde la configuration dans le fichier.
        """
        try:
            with open(self.config_file, "w") as f:
                json.dump(self._config, f, indent=2, sort_keys=True)
            logging.info(f"Configuration sauvegardée dans {self.config_file}")
            return True
        except Exception as e:
            logging.error(f"Erreur lors de la sauvegarde de la configuration: {e}")
            return False

    def get(self, key, default=None):
        """
        Récupère une valeur de configuration.
        Si la clé n'existe pas, renvoie la valeur par défaut spécifiée ou celle définie dans DEFAULTS.
        """
        if default is None and key in self.DEFAULTS:
            default = self.DEFAULTS[key]
        return self._config.get(key, default)

    def set(self, key, value):
        """
        Définit une valeur de configuration.
        """
        self._config[key] = value

    def update(self, **kwargs):
        """
        Met à jour plusieurs valeurs de configuration en une seule fois.
        """
        self._config.update(kwargs)

    def to_dict(self):
        """
        Retourne la configuration effective (valeurs par défaut complétées).
        """
        merged = dict(self.DEFAULTS)
        merged.update(self._config)
        return merged

    def set_from_args(self, args):
        """
        Met à jour la configuration à partir des arguments de la ligne de commande.
        Seuls les attributs présents sur `args` (selon la sous-commande) sont repris.
        """
        updates = {}
        for attribute, key in self.ARG_KEYS.items():
            if hasattr(args, attribute) and getattr(args, attribute) is not None:
                updates[key] = getattr(args, attribute)
        self.update(**updates)
