from hypercl.cli import main

main()
