# Run the command-line interface without installing the package: python main.py verify --quick

from src.cli import main

if __name__ == "__main__":
    main()
