"""Extract an instrument from a microphone mix using a contact-pickup reference."""
