from srnaflow.cli import main

raise SystemExit(main())
