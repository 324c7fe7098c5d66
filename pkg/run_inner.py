# run_inner.py
import os
import sys


def inner_run():
    # src を import パスに追加して CLI を起動する
    current_dir = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, os.path.join(current_dir, "src"))

    from main import main

    sys.exit(main())


if __name__ == "__main__":
    inner_run()
