import sys

import sqp.application


def main():
    sys.exit(sqp.application.run())


if __name__ == "__main__":
    main()
