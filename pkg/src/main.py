"""
Point d'entrée de l'outil d'évaluation OOV
"""
from api.commands import app


def main():
    """Lance l'application en ligne de commande"""
    app()


if __name__ == "__main__":
    main()
