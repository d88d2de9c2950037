# Chemotaxis lab
