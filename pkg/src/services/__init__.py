# Business logic services