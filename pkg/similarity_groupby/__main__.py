from similarity_groupby.cli import main

main()
