from fairprice.cli import main

main()
