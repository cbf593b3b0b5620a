from adaptive_parareal.cli import main

raise SystemExit(main())
