from fractel.cli import main

main()
