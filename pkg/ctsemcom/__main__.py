from ctsemcom.cli import main

main()
