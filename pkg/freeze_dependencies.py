import os


def main():
    os.system("pip freeze --exclude two-stage-apm > frozen_dependencies.txt")


if __name__ == "__main__":
    main()
